use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_schema, from_value, parse_value, read_text, write_json, DatasetError, SCHEMA_VERSION};
use crate::geometry::{Polyline2D, Vec2, ViewId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GuidewireType {
    Angled,
    Straight,
}

impl fmt::Display for GuidewireType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GuidewireType::Angled => "angled",
            GuidewireType::Straight => "straight",
        })
    }
}

/// One annotated polyline, flattened with its video's attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRecord {
    pub frame_index: usize,
    pub view_id: ViewId,
    pub polyline: Vec<Vec2>,
    pub guidewire_type: GuidewireType,
    pub fluid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameAnnotation {
    pub frame: usize,
    pub view: ViewId,
    /// `[x, y]` pixels at the file's `image_size`, tip first.
    pub polyline: Vec<[f64; 2]>,
}

fn native_size() -> [usize; 2] {
    [1024, 1024]
}

/// One video's annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationFile {
    pub schema: u32,
    pub video_id: String,
    pub guidewire_type: GuidewireType,
    pub fluid: bool,
    /// Width and height of the pixel frame the coordinates refer to.
    #[serde(default = "native_size")]
    pub image_size: [usize; 2],
    pub frames: Vec<FrameAnnotation>,
}

#[derive(Deserialize)]
struct Header {
    #[allow(dead_code)]
    schema: u32,
    video_id: String,
    guidewire_type: GuidewireType,
    fluid: bool,
    #[serde(default = "native_size")]
    image_size: [usize; 2],
    frames: Vec<serde_json::Value>,
}

impl AnnotationFile {
    pub fn new(video_id: impl Into<String>, guidewire_type: GuidewireType, fluid: bool) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            video_id: video_id.into(),
            guidewire_type,
            fluid,
            image_size: native_size(),
            frames: Vec::new(),
        }
    }

    /// Sorts frames by `(frame, view)` and checks every invariant.
    pub fn validate(&mut self, origin: &str) -> Result<(), DatasetError> {
        if self.schema != SCHEMA_VERSION {
            return Err(DatasetError::schema(
                origin,
                format!("unsupported schema version {}", self.schema),
            ));
        }
        self.frames.sort_by_key(|f| (f.frame, f.view));
        let mut seen = BTreeSet::new();
        for f in &self.frames {
            let name = format!("frame {} view {}", f.frame, f.view);
            if f.polyline.len() < 2 {
                return Err(DatasetError::invariant(
                    origin,
                    format!("{name}: polyline needs at least 2 points, has {}", f.polyline.len()),
                ));
            }
            if f.polyline.iter().flatten().any(|v| !v.is_finite()) {
                return Err(DatasetError::invariant(
                    origin,
                    format!("{name}: non-finite coordinate"),
                ));
            }
            if !seen.insert((f.frame, f.view)) {
                return Err(DatasetError::invariant(origin, format!("{name}: annotated twice")));
            }
        }
        Ok(())
    }

    pub fn records(&self) -> Vec<AnnotationRecord> {
        self.frames
            .iter()
            .map(|f| AnnotationRecord {
                frame_index: f.frame,
                view_id: f.view,
                polyline: f.polyline.iter().map(|p| Vec2::new(p[0], p[1])).collect(),
                guidewire_type: self.guidewire_type,
                fluid: self.fluid,
            })
            .collect()
    }

    pub fn push(&mut self, frame: usize, view: ViewId, polyline: &Polyline2D) {
        self.frames.push(FrameAnnotation {
            frame,
            view,
            polyline: polyline.points().iter().map(|p| [p.x, p.y]).collect(),
        });
    }

    /// The polyline of `frame` in `view`, if annotated.
    pub fn polyline(&self, frame: usize, view: ViewId) -> Option<Result<Polyline2D, DatasetError>> {
        self.frames
            .iter()
            .find(|f| f.frame == frame && f.view == view)
            .map(|f| {
                let pts = f.polyline.iter().map(|p| Vec2::new(p[0], p[1])).collect();
                Polyline2D::new(pts, view, frame)
                    .map_err(|e| DatasetError::invariant(&self.video_id, format!("frame {frame} view {view}: {e}")))
            })
    }

    /// Frame indices annotated in both views, ascending.
    pub fn paired_frames(&self) -> Vec<usize> {
        let a: BTreeSet<usize> = self
            .frames
            .iter()
            .filter(|f| f.view == ViewId::A)
            .map(|f| f.frame)
            .collect();
        self.frames
            .iter()
            .filter(|f| f.view == ViewId::B && a.contains(&f.frame))
            .map(|f| f.frame)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }
}

/// Parses and validates an annotation document. `origin` names the source
/// in error messages.
pub fn parse_annotation_file(text: &str, origin: &str) -> Result<AnnotationFile, DatasetError> {
    let v = parse_value(text, origin)?;
    check_schema(&v, origin)?;
    let h: Header = from_value(v, origin, "annotation header")?;
    let mut frames = Vec::with_capacity(h.frames.len());
    for (i, f) in h.frames.into_iter().enumerate() {
        let label = match f.get("frame").and_then(|x| x.as_u64()) {
            Some(n) => format!("frames[{i}] (frame {n})"),
            None => format!("frames[{i}]"),
        };
        frames.push(from_value::<FrameAnnotation>(f, origin, &label)?);
    }
    let mut file = AnnotationFile {
        schema: SCHEMA_VERSION,
        video_id: h.video_id,
        guidewire_type: h.guidewire_type,
        fluid: h.fluid,
        image_size: h.image_size,
        frames,
    };
    file.validate(origin)?;
    Ok(file)
}

pub fn load_annotation_file(path: &Path) -> Result<AnnotationFile, DatasetError> {
    parse_annotation_file(&read_text(path)?, &path.display().to_string())
}

/// Records sorted by `(frame_index, view_id)`.
pub fn load_annotations(path: &Path) -> Result<Vec<AnnotationRecord>, DatasetError> {
    Ok(load_annotation_file(path)?.records())
}

/// Validates (sorting frames) and writes the file.
pub fn save_annotation_file(path: &Path, file: &AnnotationFile) -> Result<(), DatasetError> {
    let mut f = file.clone();
    f.validate(&path.display().to_string())?;
    write_json(path, &f)
}
