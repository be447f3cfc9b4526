//! Synthetic ground truth: smooth guidewire-like curves (optionally with a
//! loop), a bi-planar camera pair, rendered frame sequences and exact
//! polyline annotations.

mod curves;
mod render;
mod rig;
mod video;

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::reconstruction::ReconstructionError;

pub use curves::{advancing_trajectory, catmull_rom, gen_curve, CurveGenParams};
pub use render::{
    project_polyline, render_polyline, render_sequence, segments_intersect, self_intersects, RenderConfig,
    SyntheticSample,
};
pub use rig::{default_rig, make_camera_pair, make_camera_pair_sized, DEFAULT_IMAGE_SIZE};
pub use video::{generate_video, Placement, RigParams, SynthParams, MIN_VISIBLE_FRACTION};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SyntheticError {
    #[error("baseline angle {0} must lie strictly between 0 and pi")]
    DegenerateAngle(f64),
    #[error("projection of frame {frame} leaves the image in view {view}")]
    OutOfBounds { frame: usize, view: char },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Reconstruction(#[from] ReconstructionError),
}
