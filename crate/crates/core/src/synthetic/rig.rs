use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Rotation3;

use super::SyntheticError;
use crate::geometry::{CameraParameters, Mat3, Vec3};
use crate::reconstruction::StereoRig;

/// Native annotation resolution, pixels per side.
pub const DEFAULT_IMAGE_SIZE: usize = 1024;

/// Default bench geometry: 90 degree separation, 1 m source distance and a
/// 4000 px focal length, i.e. about 0.25 mm per pixel at the isocenter.
pub fn default_rig() -> StereoRig {
    make_camera_pair_sized(FRAC_PI_2, 1000.0, 4000.0, DEFAULT_IMAGE_SIZE).expect("default rig parameters are valid")
}

pub fn make_camera_pair(baseline_angle: f64, distance: f64, focal_px: f64) -> Result<StereoRig, SyntheticError> {
    make_camera_pair_sized(baseline_angle, distance, focal_px, DEFAULT_IMAGE_SIZE)
}

/// Two cameras at `distance` mm from the origin, both looking at it, the
/// second rotated by `baseline_angle` about the vertical (world y) axis.
/// The principal point is the image center.
pub fn make_camera_pair_sized(
    baseline_angle: f64,
    distance: f64,
    focal_px: f64,
    image_size: usize,
) -> Result<StereoRig, SyntheticError> {
    if !(baseline_angle > 0.0 && baseline_angle < PI) {
        return Err(SyntheticError::DegenerateAngle(baseline_angle));
    }
    if !(distance > 0.0 && focal_px > 0.0 && image_size > 0) {
        return Err(SyntheticError::InvalidParams(
            "distance, focal length and image size must be positive".into(),
        ));
    }
    let c = image_size as f64 / 2.0;
    let k = Mat3::new(focal_px, 0.0, c, 0.0, focal_px, c, 0.0, 0.0, 1.0);
    let t = Vec3::new(0.0, 0.0, distance);
    let cam_a = CameraParameters::new(k, Mat3::identity(), t)?;
    let ry = Rotation3::from_axis_angle(&Vec3::y_axis(), baseline_angle).into_inner();
    let cam_b = CameraParameters::new(k, ry.transpose(), t)?;
    Ok(StereoRig::new(cam_a, cam_b, (image_size, image_size))?)
}
