//! Bi-planar reconstruction: epipolar matching of the two annotated
//! polylines, linear triangulation of matched pairs, and per-sample
//! reprojection error profiles.
//!
//! View A drives the arclength parameterization; view B is matched to it.

mod matching;
mod triangulate;

use nalgebra::{Matrix4, Vector4};
use thiserror::Error;

use crate::calibration::CalibrationError;
use crate::geometry::{
    arclength_resample, project, smooth_curve, CameraParameters, Curve3D, GeometryError, Mat3, Mat34, Polyline2D, Vec3,
};

pub use matching::{match_polylines, match_polylines_with, MatchConfig, PolylineMatch};
pub use triangulate::{triangulate, MIN_RAY_ANGLE_DEG};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReconstructionError {
    #[error("camera centers coincide")]
    CoincidentCenters,
    #[error("no epipolar overlap between the two polylines")]
    NoOverlap,
    #[error("triangulated point is behind camera {0}")]
    BehindCamera(char),
    #[error("viewing rays nearly parallel ({0:.4} deg)")]
    IllConditioned(f64),
    #[error("empty curve")]
    EmptyCurve,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
}

/// Two calibrated views sharing a world frame.
#[derive(Debug, Clone, PartialEq)]
pub struct StereoRig {
    pub cam_a: CameraParameters,
    pub cam_b: CameraParameters,
    /// Maps ideal pixels of A to epipolar lines in B: `x_b^T F x_a = 0`.
    pub fundamental: Mat3,
    /// Native image size (width, height) in pixels.
    pub image_size: (usize, usize),
}

impl StereoRig {
    pub fn new(
        cam_a: CameraParameters,
        cam_b: CameraParameters,
        image_size: (usize, usize),
    ) -> Result<Self, ReconstructionError> {
        let fundamental = fundamental_from_projections(&cam_a.p, &cam_b.p)?;
        Ok(Self {
            cam_a,
            cam_b,
            fundamental,
            image_size,
        })
    }

    /// Applies each camera's undistortion field (if any) to its polyline.
    pub fn undistort_polylines(
        &self,
        poly_a: &Polyline2D,
        poly_b: &Polyline2D,
    ) -> Result<(Polyline2D, Polyline2D), ReconstructionError> {
        Ok((
            undistort_polyline(&self.cam_a, poly_a)?,
            undistort_polyline(&self.cam_b, poly_b)?,
        ))
    }
}

fn undistort_polyline(cam: &CameraParameters, poly: &Polyline2D) -> Result<Polyline2D, ReconstructionError> {
    if cam.distortion.is_none() {
        return Ok(poly.clone());
    }
    let pts = poly
        .points()
        .iter()
        .map(|p| cam.undistort(p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Polyline2D::new(pts, poly.view, poly.frame_index)?)
}

/// Homogeneous camera center: the right null vector of `P`, by cofactors.
fn camera_center(p: &Mat34) -> Vector4<f64> {
    let minor = |skip: usize| {
        let cols: Vec<usize> = (0..4).filter(|&c| c != skip).collect();
        let mut m = Mat3::zeros();
        for r in 0..3 {
            for (j, &c) in cols.iter().enumerate() {
                m[(r, j)] = p[(r, c)];
            }
        }
        m.determinant()
    };
    Vector4::new(minor(0), -minor(1), minor(2), -minor(3))
}

/// Bilinear form of the two projections: `F[j][i]` is, up to sign, the
/// determinant of `P_A` without row `i` stacked on `P_B` without row `j`.
/// Truncated to rank 2 and scaled to unit Frobenius norm.
pub fn fundamental_from_projections(p_a: &Mat34, p_b: &Mat34) -> Result<Mat3, ReconstructionError> {
    let ca = camera_center(p_a);
    let cb = camera_center(p_b);
    let (Some(ca3), Some(cb3)) = (dehomogenize(&ca), dehomogenize(&cb)) else {
        return Err(ReconstructionError::Geometry(GeometryError::InvalidCamera(
            "camera at infinity".into(),
        )));
    };
    if (ca3 - cb3).norm() <= 1e-9 * (1.0 + ca3.norm() + cb3.norm()) {
        return Err(ReconstructionError::CoincidentCenters);
    }
    // Work in pixel coordinates centered on each principal point and scaled
    // by its focal length, where both matrices are well balanced.
    let ta = conditioning(p_a);
    let tb = conditioning(p_b);
    let pa = ta * p_a;
    let pb = tb * p_b;
    let pa = pa / pa.norm();
    let pb = pb / pb.norm();
    let mut f = Mat3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let mut m = Matrix4::<f64>::zeros();
            let mut r = 0;
            for k in (0..3).filter(|&k| k != i) {
                m.set_row(r, &pa.row(k));
                r += 1;
            }
            for k in (0..3).filter(|&k| k != j) {
                m.set_row(r, &pb.row(k));
                r += 1;
            }
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            f[(j, i)] = sign * m.determinant();
        }
    }
    let mut svd = f.svd(true, true);
    // Zero the smallest singular value.
    let (imin, _) = svd.singular_values.argmin();
    svd.singular_values[imin] = 0.0;
    let f2 = svd.recompose().expect("U and V^T were computed");
    let f3 = tb.transpose() * f2 * ta;
    Ok(f3 / f3.norm())
}

/// Similarity taking pixels to principal-point-centered, focal-scaled
/// coordinates, read off the image of the absolute conic `M M^T`.
fn conditioning(p: &Mat34) -> Mat3 {
    let m = p.fixed_view::<3, 3>(0, 0);
    let w = m * m.transpose();
    if w[(2, 2)] <= 0.0 {
        return Mat3::identity();
    }
    let cx = w[(0, 2)] / w[(2, 2)];
    let cy = w[(1, 2)] / w[(2, 2)];
    let f2 = 0.5 * (w[(0, 0)] + w[(1, 1)]) / w[(2, 2)] - 0.5 * (cx * cx + cy * cy);
    let f = if f2 > 0.0 { f2.sqrt() } else { 1.0 };
    Mat3::new(1.0 / f, 0.0, -cx / f, 0.0, 1.0 / f, -cy / f, 0.0, 0.0, 1.0)
}

fn dehomogenize(h: &Vector4<f64>) -> Option<Vec3> {
    (h.w.abs() > 0.0).then(|| Vec3::new(h.x / h.w, h.y / h.w, h.z / h.w))
}

/// Tunables for [`reconstruct_curve_with`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReconstructionConfig {
    pub matching: MatchConfig,
    /// Gaussian smoothing of the triangulated curve along arclength, mm.
    /// Zero keeps the triangulated points as they are; noisy annotations
    /// otherwise inflate the arclength.
    pub smoothing_mm: f64,
}

/// Reconstructs the 3D curve seen in both views, resampled at `delta_u` mm.
pub fn reconstruct_curve(
    rig: &StereoRig,
    poly_a: &Polyline2D,
    poly_b: &Polyline2D,
    delta_u: f64,
) -> Result<Curve3D, ReconstructionError> {
    reconstruct_curve_with(rig, poly_a, poly_b, delta_u, &ReconstructionConfig::default())
}

pub fn reconstruct_curve_with(
    rig: &StereoRig,
    poly_a: &Polyline2D,
    poly_b: &Polyline2D,
    delta_u: f64,
    cfg: &ReconstructionConfig,
) -> Result<Curve3D, ReconstructionError> {
    let (ua, ub) = rig.undistort_polylines(poly_a, poly_b)?;
    let matched = match_polylines_with(rig, &ua, &ub, &cfg.matching)?;
    let mut points: Vec<Vec3> = Vec::with_capacity(matched.pairs.len());
    for (xa, xb) in &matched.pairs {
        let x = triangulate(rig, xa, xb)?;
        if points.last().is_none_or(|last| (x - last).norm() > 1e-12) {
            points.push(x);
        }
    }
    let curve = smooth_curve(&Curve3D::new(points)?, cfg.smoothing_mm)?;
    Ok(arclength_resample(&curve, delta_u)?)
}

/// Per-sample pixel distance between projected curve points and the
/// annotation polylines, one entry per curve point, tip first.
#[derive(Debug, Clone, PartialEq)]
pub struct ReprojectionProfile {
    pub per_index_error_a: Vec<f64>,
    pub per_index_error_b: Vec<f64>,
}

impl ReprojectionProfile {
    pub fn len(&self) -> usize {
        self.per_index_error_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_index_error_a.is_empty()
    }
}

pub fn reprojection_profile(
    rig: &StereoRig,
    curve: &Curve3D,
    poly_a: &Polyline2D,
    poly_b: &Polyline2D,
) -> Result<ReprojectionProfile, ReconstructionError> {
    if curve.is_empty() {
        return Err(ReconstructionError::EmptyCurve);
    }
    let (ua, ub) = rig.undistort_polylines(poly_a, poly_b)?;
    let mut profile = ReprojectionProfile {
        per_index_error_a: Vec::with_capacity(curve.len()),
        per_index_error_b: Vec::with_capacity(curve.len()),
    };
    for p in curve.points() {
        profile.per_index_error_a.push(ua.distance_to(&project(&rig.cam_a, p)?));
        profile.per_index_error_b.push(ub.distance_to(&project(&rig.cam_b, p)?));
    }
    Ok(profile)
}
