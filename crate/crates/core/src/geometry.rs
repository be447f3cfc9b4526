//! Camera model, spherical/Cartesian conversion and arclength utilities.
//!
//! Units: world coordinates are millimeters, image coordinates are pixels.
//! Curves and polylines are ordered tip-first.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Matrix3, Matrix3x4, Vector2, Vector3, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::LwmModel;

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Mat34 = Matrix3x4<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("point is behind the camera (depth {0})")]
    PointBehindCamera(f64),
    #[error("polar angle {0} outside [0, pi]")]
    DomainError(f64),
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),
    #[error("resampling step {step} exceeds curve arclength {length}")]
    DeltaTooLarge { step: f64, length: f64 },
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
}

pub(crate) fn all_finite<'a>(xs: impl IntoIterator<Item = &'a f64>) -> bool {
    xs.into_iter().all(|x| x.is_finite())
}

/// Which of the two fluoroscope views an annotation or camera belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ViewId {
    A,
    B,
}

impl fmt::Display for ViewId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViewId::A => write!(f, "A"),
            ViewId::B => write!(f, "B"),
        }
    }
}

impl std::str::FromStr for ViewId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" | "a" => Ok(ViewId::A),
            "B" | "b" => Ok(ViewId::B),
            other => Err(format!("unknown view '{other}', expected A or B")),
        }
    }
}

/// Spherical coordinates: radius, polar angle from +z, azimuth from +x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalPoint {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

impl SphericalPoint {
    pub fn new(r: f64, theta: f64, phi: f64) -> Self {
        Self { r, theta, phi }
    }

    /// Maps arbitrary accumulated angles onto theta in [0, pi], phi in (-pi, pi]
    /// describing the same direction.
    pub fn canonical(r: f64, theta: f64, phi: f64) -> Self {
        let mut theta = theta.rem_euclid(2.0 * PI);
        let mut phi = phi;
        if theta > PI {
            theta = 2.0 * PI - theta;
            phi += PI;
        }
        Self {
            r,
            theta,
            phi: wrap_angle(phi),
        }
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

pub fn spherical_to_cartesian(s: SphericalPoint) -> Result<Vec3, GeometryError> {
    if !all_finite([&s.r, &s.theta, &s.phi]) {
        return Err(GeometryError::NonFiniteInput);
    }
    if !(0.0..=PI).contains(&s.theta) {
        return Err(GeometryError::DomainError(s.theta));
    }
    let (st, ct) = s.theta.sin_cos();
    let (sp, cp) = s.phi.sin_cos();
    Ok(Vec3::new(s.r * st * cp, s.r * st * sp, s.r * ct))
}

/// Inverse of [`spherical_to_cartesian`]. On the polar axis phi is 0.
pub fn cartesian_to_spherical(v: &Vec3) -> Result<SphericalPoint, GeometryError> {
    if !all_finite(v.iter()) {
        return Err(GeometryError::NonFiniteInput);
    }
    let r = v.norm();
    if r == 0.0 {
        return Err(GeometryError::ZeroVector);
    }
    let rho = v.x.hypot(v.y);
    // atan2 keeps full relative precision near the poles, unlike acos(z / r).
    let theta = rho.atan2(v.z);
    let phi = if rho == 0.0 {
        0.0
    } else {
        let p = v.y.atan2(v.x);
        if p == -PI {
            PI
        } else {
            p
        }
    };
    Ok(SphericalPoint { r, theta, phi })
}

/// Pinhole camera with optional image-space undistortion field.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraParameters {
    pub k: Mat3,
    pub r: Mat3,
    pub t: Vec3,
    pub p: Mat34,
    pub distortion: Option<LwmModel>,
}

impl CameraParameters {
    /// Builds a camera from intrinsics and extrinsics, checking the invariants
    /// on `K` and `R` and composing `P = K [R | t]`.
    pub fn new(k: Mat3, r: Mat3, t: Vec3) -> Result<Self, GeometryError> {
        if !all_finite(k.iter().chain(r.iter()).chain(t.iter())) {
            return Err(GeometryError::NonFiniteInput);
        }
        if k[(1, 0)] != 0.0 || k[(2, 0)] != 0.0 || k[(2, 1)] != 0.0 {
            return Err(GeometryError::InvalidCamera("K is not upper-triangular".into()));
        }
        if !(k[(0, 0)] > 0.0 && k[(1, 1)] > 0.0 && k[(2, 2)] > 0.0) {
            return Err(GeometryError::InvalidCamera("K diagonal must be positive".into()));
        }
        let orth = (r.transpose() * r - Mat3::identity()).norm();
        if orth > 1e-9 || (r.determinant() - 1.0).abs() > 1e-9 {
            return Err(GeometryError::InvalidCamera("R is not a proper rotation".into()));
        }
        Ok(Self {
            k,
            r,
            t,
            p: compose_projection(&k, &r, &t),
            distortion: None,
        })
    }

    pub fn with_distortion(mut self, model: LwmModel) -> Self {
        self.distortion = Some(model);
        self
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vec3 {
        -(self.r.transpose() * self.t)
    }

    /// Depth of a world point along the optical axis.
    pub fn depth(&self, p: &Vec3) -> f64 {
        (self.r * p + self.t).z
    }

    /// Maps a raw (distorted) pixel to ideal pinhole coordinates. Identity
    /// when the camera has no distortion model.
    pub fn undistort(&self, px: &Vec2) -> Result<Vec2, crate::calibration::CalibrationError> {
        match &self.distortion {
            Some(model) => crate::calibration::undistort_point(model, px),
            None => Ok(*px),
        }
    }

    /// World-space direction of the viewing ray through an ideal pixel.
    pub fn ray_direction(&self, px: &Vec2) -> Vec3 {
        let m = self.p.fixed_view::<3, 3>(0, 0).into_owned();
        let d = m.try_inverse().unwrap_or_else(Mat3::zeros) * Vec3::new(px.x, px.y, 1.0);
        d.normalize()
    }
}

pub fn compose_projection(k: &Mat3, r: &Mat3, t: &Vec3) -> Mat34 {
    let mut rt = Mat34::zeros();
    rt.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
    rt.set_column(3, t);
    k * rt
}

/// Projects a world point to pixels with the camera's projection matrix.
pub fn project(camera: &CameraParameters, p: &Vec3) -> Result<Vec2, GeometryError> {
    if !all_finite(p.iter()) {
        return Err(GeometryError::NonFiniteInput);
    }
    let depth = camera.depth(p);
    if depth <= 0.0 {
        return Err(GeometryError::PointBehindCamera(depth));
    }
    project_with_matrix(&camera.p, p)
}

/// Projects with a bare 3x4 matrix. The third homogeneous coordinate must be
/// positive, which holds for matrices whose last row is oriented along the
/// viewing direction.
pub fn project_with_matrix(p_mat: &Mat34, x: &Vec3) -> Result<Vec2, GeometryError> {
    if !all_finite(x.iter()) {
        return Err(GeometryError::NonFiniteInput);
    }
    let h = p_mat * Vector4::new(x.x, x.y, x.z, 1.0);
    if !(h.z > 0.0) {
        return Err(GeometryError::PointBehindCamera(h.z));
    }
    Ok(Vec2::new(h.x / h.z, h.y / h.z))
}

/// Ordered, tip-first pixel-space annotation of one guidewire in one view.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline2D {
    points: Vec<Vec2>,
    pub view: ViewId,
    pub frame_index: usize,
}

impl Polyline2D {
    pub fn new(points: Vec<Vec2>, view: ViewId, frame_index: usize) -> Result<Self, GeometryError> {
        if points.len() < 2 {
            return Err(GeometryError::DegenerateCurve(format!(
                "polyline needs at least 2 points, got {}",
                points.len()
            )));
        }
        if !all_finite(points.iter().flat_map(|p| p.iter())) {
            return Err(GeometryError::NonFiniteInput);
        }
        if let Some(i) = points.windows(2).position(|w| w[0] == w[1]) {
            return Err(GeometryError::DegenerateCurve(format!(
                "polyline points {} and {} coincide",
                i,
                i + 1
            )));
        }
        Ok(Self {
            points,
            view,
            frame_index,
        })
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Euclidean distance from `q` to the nearest point on the polyline.
    pub fn distance_to(&self, q: &Vec2) -> f64 {
        self.points
            .windows(2)
            .map(|w| point_segment_distance_2d(q, &w[0], &w[1]))
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn point_segment_distance_2d(q: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    let e = b - a;
    let len2 = e.norm_squared();
    let s = if len2 > 0.0 {
        ((q - a).dot(&e) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (a + e * s - q).norm()
}

/// Ordered, tip-first 3D point sequence in millimeters.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve3D {
    points: Vec<Vec3>,
}

impl Curve3D {
    pub fn new(points: Vec<Vec3>) -> Result<Self, GeometryError> {
        if points.len() < 2 {
            return Err(GeometryError::DegenerateCurve(format!(
                "curve needs at least 2 points, got {}",
                points.len()
            )));
        }
        if !all_finite(points.iter().flat_map(|p| p.iter())) {
            return Err(GeometryError::NonFiniteInput);
        }
        if let Some(i) = points.windows(2).position(|w| w[0] == w[1]) {
            return Err(GeometryError::DegenerateCurve(format!(
                "curve points {} and {} coincide",
                i,
                i + 1
            )));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Vec3> {
        self.points
    }

    pub fn tip(&self) -> Vec3 {
        self.points[0]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Total piecewise-linear arclength.
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Applies `x -> rotation * x + translation` to every point.
    pub fn transformed(&self, rotation: &Mat3, translation: &Vec3) -> Self {
        Self {
            points: self.points.iter().map(|p| rotation * p + translation).collect(),
        }
    }
}

/// Resamples a polyline curve so that consecutive output points are exactly
/// `delta_u` apart (Euclidean), walking forward along the input from the tip.
///
/// Every output point lies on the input polyline. The last input point is
/// appended when the remainder is shorter than `delta_u`. Because each output
/// segment has length `delta_u`, resampling the output again at the same
/// step reproduces it.
pub fn arclength_resample(curve: &Curve3D, delta_u: f64) -> Result<Curve3D, GeometryError> {
    if !(delta_u > 0.0) || !delta_u.is_finite() {
        return Err(GeometryError::DegenerateCurve(format!(
            "resampling step must be positive, got {delta_u}"
        )));
    }
    let pts = curve.points();
    let length = curve.length();
    if length < delta_u * (1.0 - 1e-12) {
        return Err(GeometryError::DeltaTooLarge { step: delta_u, length });
    }

    let r2 = delta_u * delta_u;
    let mut out = vec![pts[0]];
    let mut current = pts[0];
    // Position on the input: segment index and parameter within it.
    let mut seg = 0usize;
    let mut s_lo = 0.0f64;

    'walk: loop {
        while seg + 1 < pts.len() {
            let a = pts[seg];
            let e = pts[seg + 1] - a;
            let d = a - current;
            // |d + s e|^2 = r^2 -> (e.e) s^2 + 2 (d.e) s + (d.d - r^2) = 0
            let qa = e.norm_squared();
            let qb = d.dot(&e);
            let qc = d.norm_squared() - r2;
            let disc = qb * qb - qa * qc;
            if disc >= 0.0 {
                // Larger root: the point where the walk leaves the sphere.
                let sq = disc.sqrt();
                let s = if qb <= 0.0 {
                    (-qb + sq) / qa
                } else {
                    // Stable form of the same root, valid since qc <= 0 here.
                    -qc / (qb + sq)
                };
                if s >= s_lo - 1e-12 && s <= 1.0 + 1e-12 {
                    let s = s.clamp(s_lo, 1.0);
                    let next = a + e * s;
                    out.push(next);
                    current = next;
                    s_lo = s;
                    continue 'walk;
                }
            }
            seg += 1;
            s_lo = 0.0;
        }
        break;
    }

    let end = *pts.last().expect("curve has >= 2 points");
    if (end - current).norm() > delta_u * 1e-9 {
        out.push(end);
    }
    Curve3D::new(out)
}

/// Gaussian smoothing along arclength with standard deviation `sigma_mm`.
/// The curve is extended by point reflection through each end, so the
/// endpoints stay fixed and straight curves are unchanged.
pub fn smooth_curve(curve: &Curve3D, sigma_mm: f64) -> Result<Curve3D, GeometryError> {
    if !(sigma_mm >= 0.0) || !sigma_mm.is_finite() {
        return Err(GeometryError::DomainError(sigma_mm));
    }
    if sigma_mm == 0.0 {
        return Ok(curve.clone());
    }
    let p = curve.points();
    let n = p.len();
    let mut cum = Vec::with_capacity(n);
    cum.push(0.0);
    for w in p.windows(2) {
        cum.push(cum[cum.len() - 1] + (w[1] - w[0]).norm());
    }
    let total = cum[n - 1];
    let mut ext: Vec<(f64, Vec3)> = Vec::with_capacity(3 * n);
    ext.extend((1..n).rev().map(|i| (-cum[i], p[0] * 2.0 - p[i])));
    ext.extend((0..n).map(|i| (cum[i], p[i])));
    ext.extend((0..n - 1).rev().map(|i| (2.0 * total - cum[i], p[n - 1] * 2.0 - p[i])));
    let m = ext.len();
    // Trapezoid weight of each sample along the extended curve.
    let len_w: Vec<f64> = (0..m)
        .map(|j| {
            let l = if j + 1 < m { ext[j + 1].0 - ext[j].0 } else { 0.0 };
            let r = if j > 0 { ext[j].0 - ext[j - 1].0 } else { 0.0 };
            0.5 * (l + r)
        })
        .collect();
    let reach = 4.0 * sigma_mm;
    let mut lo = 0;
    let mut out = Vec::with_capacity(n);
    for &s in &cum {
        while ext[lo].0 < s - reach {
            lo += 1;
        }
        let mut acc = Vec3::zeros();
        let mut wsum = 0.0;
        for j in lo..m {
            let d = ext[j].0 - s;
            if d > reach {
                break;
            }
            let w = (-0.5 * d * d / (sigma_mm * sigma_mm)).exp() * len_w[j];
            acc += ext[j].1 * w;
            wsum += w;
        }
        out.push(acc / wsum);
    }
    out[0] = p[0];
    out[n - 1] = p[n - 1];
    out.dedup();
    Curve3D::new(out)
}
