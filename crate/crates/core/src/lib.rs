//! Bi-planar guidewire shape reconstruction and prediction.
//!
//! The pipeline runs calibration, undistortion, epipolar matching,
//! triangulation and shape metrics. It also provides a spherical-offset
//! curve representation, a recurrent shape predictor trained on rendered
//! frame sequences, and a synthetic generator that supplies ground truth.

pub mod calibration;
pub mod curve_repr;
pub mod dataset_io;
pub mod geometry;
pub mod metrics;
pub mod predictor;
pub mod reconstruction;
pub mod synthetic;
