//! Tip-plus-spherical-offsets curve encoding.
//!
//! A curve is resampled into fixed-length steps of `radius`. Each step's
//! direction is given by absolute angles `(theta_k, phi_k)` and stored as
//! cumulative offsets from the previous step, starting from `(0, 0)`, so the
//! first offset carries the absolute direction of the first segment.
//! Angles are measured in the world frame.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    arclength_resample, cartesian_to_spherical, spherical_to_cartesian, wrap_angle, Curve3D, GeometryError,
    SphericalPoint, Vec3,
};

/// Step length used when none is configured, mm.
pub const DEFAULT_RADIUS_MM: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveReprError {
    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),
    #[error("radius {radius} exceeds curve arclength {length}")]
    RadiusTooLarge { radius: f64, length: f64 },
    #[error("invalid spherical curve: {0}")]
    Invalid(String),
}

impl From<GeometryError> for CurveReprError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::DeltaTooLarge { step, length } => CurveReprError::RadiusTooLarge { radius: step, length },
            other => CurveReprError::DegenerateCurve(other.to_string()),
        }
    }
}

/// `(delta_theta, delta_phi)` in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct AngularOffset {
    pub delta_theta: f64,
    pub delta_phi: f64,
}

impl From<[f64; 2]> for AngularOffset {
    fn from(v: [f64; 2]) -> Self {
        Self {
            delta_theta: v[0],
            delta_phi: v[1],
        }
    }
}

impl From<AngularOffset> for [f64; 2] {
    fn from(o: AngularOffset) -> Self {
        [o.delta_theta, o.delta_phi]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalCurve {
    pub tip: Vec3,
    #[serde(rename = "r")]
    pub radius: f64,
    pub offsets: Vec<AngularOffset>,
}

impl SphericalCurve {
    /// Number of segments (the stop index).
    pub fn length(&self) -> usize {
        self.offsets.len()
    }

    /// Scalars needed to describe the curve: tip, radius and two angles per
    /// segment.
    pub fn parameter_count(&self) -> usize {
        3 + 1 + 2 * self.offsets.len()
    }

    fn validate(&self) -> Result<(), CurveReprError> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(CurveReprError::Invalid(format!(
                "radius must be positive, got {}",
                self.radius
            )));
        }
        if self.offsets.is_empty() {
            return Err(CurveReprError::Invalid("no segments".into()));
        }
        let finite = self.tip.iter().all(|v| v.is_finite())
            && self
                .offsets
                .iter()
                .all(|o| o.delta_theta.is_finite() && o.delta_phi.is_finite());
        if !finite {
            return Err(CurveReprError::Invalid("non-finite values".into()));
        }
        Ok(())
    }
}

/// Resamples `curve` at `radius` and drops a trailing partial segment, which
/// a fixed step length cannot represent.
pub fn resample_full_steps(curve: &Curve3D, radius: f64) -> Result<Curve3D, CurveReprError> {
    let resampled = arclength_resample(curve, radius)?;
    let pts = resampled.points();
    let n = pts.len();
    let last = (pts[n - 1] - pts[n - 2]).norm();
    if (last - radius).abs() <= 1e-9 * radius.max(1.0) {
        return Ok(resampled);
    }
    if n == 2 {
        return Err(CurveReprError::RadiusTooLarge {
            radius,
            length: curve.length(),
        });
    }
    Ok(Curve3D::new(pts[..n - 1].to_vec())?)
}

pub fn encode(curve: &Curve3D, radius: f64) -> Result<SphericalCurve, CurveReprError> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(CurveReprError::Invalid(format!(
            "radius must be positive, got {radius}"
        )));
    }
    let length = curve.length();
    if length < radius {
        return Err(CurveReprError::RadiusTooLarge { radius, length });
    }
    let resampled = resample_full_steps(curve, radius)?;
    let pts = resampled.points();
    let mut offsets = Vec::with_capacity(pts.len() - 1);
    let (mut prev_theta, mut prev_phi) = (0.0, 0.0);
    for w in pts.windows(2) {
        let s = cartesian_to_spherical(&(w[1] - w[0]))?;
        offsets.push(AngularOffset {
            delta_theta: s.theta - prev_theta,
            delta_phi: wrap_angle(s.phi - prev_phi),
        });
        prev_theta = s.theta;
        prev_phi = s.phi;
    }
    Ok(SphericalCurve {
        tip: pts[0],
        radius,
        offsets,
    })
}

/// Accumulates the offsets and walks `radius` along each direction.
/// Accumulated polar angles outside `[0, pi]` are folded at conversion.
pub fn decode(sc: &SphericalCurve) -> Result<Curve3D, CurveReprError> {
    sc.validate()?;
    let mut pts = Vec::with_capacity(sc.offsets.len() + 1);
    pts.push(sc.tip);
    let (mut theta, mut phi) = (0.0, 0.0);
    let mut p = sc.tip;
    for o in &sc.offsets {
        theta += o.delta_theta;
        phi += o.delta_phi;
        p += spherical_to_cartesian(SphericalPoint::canonical(sc.radius, theta, phi))?;
        pts.push(p);
    }
    Ok(Curve3D::new(pts)?)
}
