//! Shape-error metrics between a predicted and a reference curve.
//!
//! Both curves are resampled at the same arclength step and compared point
//! by point from the tip. When their lengths differ the longer one is
//! truncated to the shorter sample count.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{arclength_resample, Curve3D, GeometryError, Vec3};

/// Shape-comparison results measured on real clinical data, for comparison only.
pub mod reference {
    /// (mean, std) in mm for the spherical-offset predictor.
    pub const SPHERICAL_MAX_ED: (f64, f64) = (6.88, 5.23);
    pub const SPHERICAL_METE: (f64, f64) = (3.28, 2.59);
    pub const SPHERICAL_MERS: (f64, f64) = (4.54, 3.67);
    pub const SPHERICAL_FRECHET: (f64, f64) = (6.70, 5.16);
    /// (mean, std) in mm for the Cartesian baseline.
    pub const CARTESIAN_MAX_ED: (f64, f64) = (10.00, 4.64);
    pub const CARTESIAN_METE: (f64, f64) = (6.93, 3.94);
    pub const CARTESIAN_MERS: (f64, f64) = (5.33, 2.73);
    pub const CARTESIAN_FRECHET: (f64, f64) = (8.95, 4.37);
    /// Reconstruction validation against simulated guidewires, mm.
    pub const VALIDATION_MAX_ED: (f64, f64) = (2.880, 0.640);
    pub const VALIDATION_METE: (f64, f64) = (1.527, 0.877);
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),
    #[error("empty polyline")]
    EmptyPolyline,
}

impl From<GeometryError> for MetricsError {
    fn from(e: GeometryError) -> Self {
        MetricsError::DegenerateCurve(e.to_string())
    }
}

/// Pointwise shape errors, millimeters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeMetrics {
    /// Largest pointwise distance.
    pub max_ed: f64,
    /// Distance between the tip samples.
    pub mete: f64,
    /// Mean pointwise distance.
    pub mers: f64,
    /// Discrete Fréchet distance between the resampled polylines.
    pub frechet: f64,
}

pub fn compare_shapes(pred: &Curve3D, truth: &Curve3D, delta_u: f64) -> Result<ShapeMetrics, MetricsError> {
    if !(delta_u > 0.0) {
        return Err(MetricsError::DegenerateCurve(format!(
            "step must be positive, got {delta_u}"
        )));
    }
    let a = resample_or_endpoints(pred, delta_u)?;
    let b = resample_or_endpoints(truth, delta_u)?;
    let n = a.len().min(b.len());
    let d: Vec<f64> = a.points()[..n]
        .iter()
        .zip(&b.points()[..n])
        .map(|(p, q)| (p - q).norm())
        .collect();
    Ok(ShapeMetrics {
        max_ed: d.iter().copied().fold(0.0, f64::max),
        mete: d[0],
        mers: d.iter().sum::<f64>() / n as f64,
        frechet: frechet_distance(a.points(), b.points())?,
    })
}

/// A curve shorter than one step keeps only its endpoints, as if its single
/// partial segment were the final one.
fn resample_or_endpoints(c: &Curve3D, delta_u: f64) -> Result<Curve3D, MetricsError> {
    if c.length() < delta_u {
        let pts = c.points();
        return Ok(Curve3D::new(vec![pts[0], pts[pts.len() - 1]])?);
    }
    Ok(arclength_resample(c, delta_u)?)
}

/// Discrete Fréchet distance by dynamic programming over the coupling
/// table, one row at a time.
pub fn frechet_distance(a: &[Vec3], b: &[Vec3]) -> Result<f64, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptyPolyline);
    }
    let m = b.len();
    let mut prev = vec![0.0f64; m];
    let mut cur = vec![0.0f64; m];
    for (i, p) in a.iter().enumerate() {
        for j in 0..m {
            let d = (p - b[j]).norm();
            cur[j] = match (i, j) {
                (0, 0) => d,
                (0, _) => cur[j - 1].max(d),
                (_, 0) => prev[0].max(d),
                _ => prev[j].min(prev[j - 1]).min(cur[j - 1]).max(d),
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(offset: Vec3) -> Curve3D {
        Curve3D::new(
            (0..30)
                .map(|i| Vec3::new(i as f64, (i as f64 * 0.3).sin(), 0.0) + offset)
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn identical_curves() {
        let c = line(Vec3::zeros());
        let m = compare_shapes(&c, &c, 1.0).unwrap();
        assert_eq!(
            m,
            ShapeMetrics {
                max_ed: 0.0,
                mete: 0.0,
                mers: 0.0,
                frechet: 0.0
            }
        );
    }

    #[test]
    fn uniform_translation() {
        let a = line(Vec3::new(0.0, 0.0, 1.0));
        let b = line(Vec3::zeros());
        let m = compare_shapes(&a, &b, 1.5).unwrap();
        for v in [m.max_ed, m.mete, m.mers, m.frechet] {
            assert!((v - 1.0).abs() < 1e-12, "{m:?}");
        }
    }

    #[test]
    fn frechet_examples() {
        let a = [Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0)];
        let b = [Vec3::new(0.0, 1.0, 0.0), Vec3::new(1.0, 1.0, 0.0)];
        assert_eq!(frechet_distance(&a, &b).unwrap(), 1.0);
        assert_eq!(frechet_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(frechet_distance(&a, &[]), Err(MetricsError::EmptyPolyline));
    }

    #[test]
    fn curve_shorter_than_step_uses_endpoints() {
        let short = Curve3D::new(vec![Vec3::zeros(), Vec3::new(0.0, 0.0, 1.5)]).unwrap();
        let m = compare_shapes(&short, &line(Vec3::zeros()), 2.0).unwrap();
        assert_eq!(m.mete, 0.0);
        let p = arclength_resample(&line(Vec3::zeros()), 2.0).unwrap().points()[1];
        assert!((m.max_ed - (p - Vec3::new(0.0, 0.0, 1.5)).norm()).abs() < 1e-12);
    }
}
