//! Per-view calibration: image undistortion with a local weighted mean
//! field, projection matrix estimation (DLT, RANSAC, Levenberg-Marquardt
//! refinement) and decomposition into intrinsics and extrinsics.
//!
//! Each view is calibrated independently; the calibration object defines
//! the shared world frame.

mod bundle;
mod decompose;
mod dlt;
mod lwm;
mod ransac;
mod refine;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Vec2, Vec3};

pub use bundle::CameraBundle;
pub use decompose::decompose_projection;
pub use dlt::{dlt, reprojection_errors, rms_reprojection_error};
pub use lwm::{fit_lwm, undistort_point, undistort_point_flagged, LwmControlPoint, LwmModel};
pub use ransac::{ransac_projection, RansacConfig, RansacResult};
pub use refine::{refine_projection, RefineOutcome};

/// Neighborhood size used by the LWM fit unless configured otherwise.
pub const DEFAULT_LWM_NEIGHBORHOOD: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("insufficient points: need at least {needed}, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("rank-deficient neighborhood around control point {0}")]
    RankDeficientNeighborhood(usize),
    #[error("point ({0}, {1}) is outside the support of every control point")]
    OutsideSupport(f64, f64),
    #[error("degenerate configuration: design matrix condition number {0:.3e}")]
    DegenerateConfiguration(f64),
    #[error("no consensus: best hypothesis has {0} inliers")]
    NoConsensus(usize),
    #[error("refinement diverged")]
    DivergedError,
    #[error("projection matrix is rank deficient")]
    RankDeficientProjection,
    #[error("left 3x3 block of the projection matrix is singular")]
    SingularLeftBlock,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// A distorted image position paired with its known true position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence2D2D {
    pub distorted: Vec2,
    #[serde(rename = "true")]
    pub true_pos: Vec2,
}

/// A calibration-object point in millimeters and its pixel observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence3D2D {
    pub world: Vec3,
    pub image: Vec2,
}
