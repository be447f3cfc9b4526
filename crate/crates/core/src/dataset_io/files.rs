use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_json, write_json, DatasetError, SCHEMA_VERSION};
use crate::calibration::{CameraBundle, Correspondence3D2D};
use crate::geometry::{Curve3D, Vec3, ViewId};
use crate::predictor::{Checkpoint, ModelParams};
use crate::reconstruction::StereoRig;

/// 3D-2D calibration correspondences for one view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceFile {
    pub schema: u32,
    pub view: ViewId,
    pub correspondences: Vec<Correspondence3D2D>,
}

impl CorrespondenceFile {
    pub fn new(view: ViewId, correspondences: Vec<Correspondence3D2D>) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            view,
            correspondences,
        }
    }
}

pub fn load_correspondences(path: &Path) -> Result<CorrespondenceFile, DatasetError> {
    let f: CorrespondenceFile = read_json(path, "correspondence file")?;
    let origin = path.display().to_string();
    if let Some(i) = f
        .correspondences
        .iter()
        .position(|c| !(c.world.iter().chain(c.image.iter()).all(|v| v.is_finite())))
    {
        return Err(DatasetError::invariant(
            &origin,
            format!("correspondence {i}: non-finite value"),
        ));
    }
    Ok(f)
}

pub fn save_correspondences(path: &Path, file: &CorrespondenceFile) -> Result<(), DatasetError> {
    write_json(path, file)
}

#[derive(Serialize, Deserialize)]
struct BundleDoc {
    schema: u32,
    #[serde(flatten)]
    bundle: CameraBundle,
}

pub fn load_camera_bundle(path: &Path) -> Result<CameraBundle, DatasetError> {
    let d: BundleDoc = read_json(path, "camera bundle")?;
    d.bundle
        .to_camera()
        .map_err(|e| DatasetError::invariant(&path.display().to_string(), e.to_string()))?;
    Ok(d.bundle)
}

pub fn save_camera_bundle(path: &Path, bundle: &CameraBundle) -> Result<(), DatasetError> {
    write_json(
        path,
        &BundleDoc {
            schema: SCHEMA_VERSION,
            bundle: bundle.clone(),
        },
    )
}

/// Both calibrated views plus the native image size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigFile {
    pub schema: u32,
    pub image_size: [usize; 2],
    pub cam_a: CameraBundle,
    pub cam_b: CameraBundle,
}

impl RigFile {
    pub fn from_rig(rig: &StereoRig) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            image_size: [rig.image_size.0, rig.image_size.1],
            cam_a: CameraBundle::from_camera(ViewId::A, &rig.cam_a),
            cam_b: CameraBundle::from_camera(ViewId::B, &rig.cam_b),
        }
    }

    pub fn to_rig(&self) -> Result<StereoRig, DatasetError> {
        let err = |e: &dyn std::fmt::Display| DatasetError::invariant("rig", e.to_string());
        let a = self.cam_a.to_camera().map_err(|e| err(&e))?;
        let b = self.cam_b.to_camera().map_err(|e| err(&e))?;
        StereoRig::new(a, b, (self.image_size[0], self.image_size[1])).map_err(|e| err(&e))
    }
}

pub fn load_rig(path: &Path) -> Result<RigFile, DatasetError> {
    let r: RigFile = read_json(path, "rig file")?;
    r.to_rig().map_err(|e| match e {
        DatasetError::Invariant { message, .. } => DatasetError::invariant(&path.display().to_string(), message),
        other => other,
    })?;
    Ok(r)
}

pub fn save_rig(path: &Path, rig: &RigFile) -> Result<(), DatasetError> {
    write_json(path, rig)
}

pub fn save_checkpoint(path: &Path, params: &ModelParams) -> Result<(), DatasetError> {
    write_json(path, &params.to_checkpoint())
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams, DatasetError> {
    let origin = path.display().to_string();
    let text = super::read_text(path)?;
    let v = super::parse_value(&text, &origin)?;
    let ck: Checkpoint = super::from_value(v, &origin, "checkpoint")?;
    ModelParams::from_checkpoint(&ck).map_err(|e| DatasetError::schema(&origin, e.to_string()))
}

/// A curve at one frame, tip first, mm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub frame: usize,
    pub points: Vec<[f64; 3]>,
}

impl CurveRecord {
    pub fn from_curve(frame: usize, curve: &Curve3D) -> Self {
        Self {
            frame,
            points: curve.points().iter().map(|p| [p.x, p.y, p.z]).collect(),
        }
    }

    pub fn to_curve(&self) -> Result<Curve3D, DatasetError> {
        Curve3D::new(self.points.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect())
            .map_err(|e| DatasetError::invariant("curve", format!("frame {}: {e}", self.frame)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveFile {
    pub schema: u32,
    pub video_id: String,
    pub curves: Vec<CurveRecord>,
}

impl CurveFile {
    pub fn new(video_id: impl Into<String>, curves: Vec<CurveRecord>) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            video_id: video_id.into(),
            curves,
        }
    }
}

pub fn save_curves(path: &Path, file: &CurveFile) -> Result<(), DatasetError> {
    write_json(path, file)
}

pub fn load_curves(path: &Path) -> Result<CurveFile, DatasetError> {
    let f: CurveFile = read_json(path, "curve file")?;
    for c in &f.curves {
        c.to_curve().map_err(|e| match e {
            DatasetError::Invariant { message, .. } => DatasetError::invariant(&path.display().to_string(), message),
            other => other,
        })?;
    }
    Ok(f)
}
