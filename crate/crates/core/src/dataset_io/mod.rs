//! On-disk formats: annotations, manifests, calibration inputs and
//! outputs, model checkpoints, curves and PGM frames. Every JSON document
//! carries `"schema": 1`.

mod annotations;
mod files;
mod manifest;
mod pgm;

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

pub use annotations::{
    load_annotation_file, load_annotations, parse_annotation_file, save_annotation_file, AnnotationFile,
    AnnotationRecord, FrameAnnotation, GuidewireType,
};
pub use files::{
    load_camera_bundle, load_checkpoint, load_correspondences, load_curves, load_rig, save_camera_bundle,
    save_checkpoint, save_correspondences, save_curves, save_rig, CorrespondenceFile, CurveFile, CurveRecord, RigFile,
};
pub use manifest::{
    load_manifest, manifest_stats, reference_manifest, save_manifest, validate_manifest, CompositionTable, Manifest,
    VideoEntry, REFERENCE_COMPOSITION,
};
pub use pgm::{read_pgm, write_pgm};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: malformed JSON: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: schema error: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: {message}")]
    Invariant { path: String, message: String },
}

impl DatasetError {
    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        DatasetError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub(crate) fn schema(path: &str, message: impl Into<String>) -> Self {
        DatasetError::Schema {
            path: path.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn invariant(path: &str, message: impl Into<String>) -> Self {
        DatasetError::Invariant {
            path: path.to_string(),
            message: message.into(),
        }
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, DatasetError> {
    fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))
}

/// Syntax errors become `Parse`, shape errors `Schema`.
pub(crate) fn parse_value(text: &str, origin: &str) -> Result<serde_json::Value, DatasetError> {
    serde_json::from_str(text).map_err(|e| DatasetError::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })
}

pub(crate) fn from_value<T: DeserializeOwned>(
    v: serde_json::Value,
    origin: &str,
    what: &str,
) -> Result<T, DatasetError> {
    serde_json::from_value(v).map_err(|e| DatasetError::schema(origin, format!("{what}: {e}")))
}

pub(crate) fn check_schema(v: &serde_json::Value, origin: &str) -> Result<(), DatasetError> {
    match v.get("schema").and_then(|s| s.as_u64()) {
        Some(1) => Ok(()),
        Some(n) => Err(DatasetError::schema(origin, format!("unsupported schema version {n}"))),
        None => Err(DatasetError::schema(origin, "missing integer field 'schema'")),
    }
}

/// Reads a versioned JSON document.
pub(crate) fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T, DatasetError> {
    let origin = path.display().to_string();
    let v = parse_value(&read_text(path)?, &origin)?;
    check_schema(&v, &origin)?;
    from_value(v, &origin, what)
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), DatasetError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| DatasetError::io(dir, e))?;
    }
    fs::write(path, to_json_string(value)).map_err(|e| DatasetError::io(path, e))
}
