use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{CalibrationError, Correspondence2D2D};
use crate::geometry::Vec2;

/// One LWM control point: a quadratic polynomial fitted around `center`
/// (a distorted position), valid within `radius` pixels.
///
/// The polynomial is expressed in local coordinates
/// `u = (x - cx) / radius`, `v = (y - cy) / radius` with basis
/// `[1, u, v, u^2, u v, v^2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LwmControlPoint {
    pub center: Vec2,
    pub coeff_x: [f64; 6],
    pub coeff_y: [f64; 6],
    pub radius: f64,
}

impl LwmControlPoint {
    fn basis(&self, p: &Vec2) -> [f64; 6] {
        let u = (p.x - self.center.x) / self.radius;
        let v = (p.y - self.center.y) / self.radius;
        [1.0, u, v, u * u, u * v, v * v]
    }

    pub fn evaluate(&self, p: &Vec2) -> Vec2 {
        let b = self.basis(p);
        let dot = |c: &[f64; 6]| c.iter().zip(b.iter()).map(|(c, b)| c * b).sum::<f64>();
        Vec2::new(dot(&self.coeff_x), dot(&self.coeff_y))
    }

    /// Blending weight `(1 - d/R)^2`, zero outside the radius.
    fn weight(&self, p: &Vec2) -> f64 {
        let d = (p - self.center).norm() / self.radius;
        if d >= 1.0 {
            0.0
        } else {
            (1.0 - d) * (1.0 - d)
        }
    }
}

/// Local weighted mean undistortion field: maps distorted pixels to their
/// true positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LwmModel {
    pub neighborhood: usize,
    pub control_points: Vec<LwmControlPoint>,
}

/// Fits one quadratic per correspondence over its `neighborhood_n` nearest
/// neighbors (itself included). The influence radius of a control point is
/// the distance to its farthest neighbor.
pub fn fit_lwm(correspondences: &[Correspondence2D2D], neighborhood_n: usize) -> Result<LwmModel, CalibrationError> {
    if neighborhood_n < 6 {
        return Err(CalibrationError::InvalidInput(format!(
            "neighborhood size {neighborhood_n} below the 6 coefficients of a quadratic"
        )));
    }
    if correspondences.len() < neighborhood_n {
        return Err(CalibrationError::InsufficientPoints {
            needed: neighborhood_n,
            got: correspondences.len(),
        });
    }
    for (i, c) in correspondences.iter().enumerate() {
        if !c.distorted.iter().chain(c.true_pos.iter()).all(|v| v.is_finite()) {
            return Err(CalibrationError::InvalidInput(format!(
                "correspondence {i} is not finite"
            )));
        }
    }

    let mut control_points = Vec::with_capacity(correspondences.len());
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(correspondences.len());
    for (i, ci) in correspondences.iter().enumerate() {
        order.clear();
        order.extend(
            correspondences
                .iter()
                .enumerate()
                .map(|(j, cj)| ((cj.distorted - ci.distorted).norm_squared(), j)),
        );
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let neighbors = &order[..neighborhood_n];
        if neighbors[1].0 == 0.0 {
            return Err(CalibrationError::InvalidInput(format!(
                "duplicate distorted position at correspondence {i}"
            )));
        }
        let radius = neighbors[neighborhood_n - 1].0.sqrt();

        let mut cp = LwmControlPoint {
            center: ci.distorted,
            coeff_x: [0.0; 6],
            coeff_y: [0.0; 6],
            radius,
        };
        let mut design = DMatrix::<f64>::zeros(neighborhood_n, 6);
        let mut rhs_x = DVector::<f64>::zeros(neighborhood_n);
        let mut rhs_y = DVector::<f64>::zeros(neighborhood_n);
        for (row, &(_, j)) in neighbors.iter().enumerate() {
            let b = cp.basis(&correspondences[j].distorted);
            for (col, v) in b.iter().enumerate() {
                design[(row, col)] = *v;
            }
            rhs_x[row] = correspondences[j].true_pos.x;
            rhs_y[row] = correspondences[j].true_pos.y;
        }
        let svd = design.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > 1e-10 * smax) {
            return Err(CalibrationError::RankDeficientNeighborhood(i));
        }
        let sx = svd
            .solve(&rhs_x, 0.0)
            .map_err(|_| CalibrationError::RankDeficientNeighborhood(i))?;
        let sy = svd
            .solve(&rhs_y, 0.0)
            .map_err(|_| CalibrationError::RankDeficientNeighborhood(i))?;
        for k in 0..6 {
            cp.coeff_x[k] = sx[k];
            cp.coeff_y[k] = sy[k];
        }
        control_points.push(cp);
    }

    Ok(LwmModel {
        neighborhood: neighborhood_n,
        control_points,
    })
}

/// Weighted blend of the local polynomials whose support contains `p`.
pub fn undistort_point(model: &LwmModel, p: &Vec2) -> Result<Vec2, CalibrationError> {
    let mut acc = Vec2::zeros();
    let mut wsum = 0.0;
    for cp in &model.control_points {
        let w = cp.weight(p);
        if w > 0.0 {
            acc += cp.evaluate(p) * w;
            wsum += w;
        }
    }
    if wsum > 0.0 {
        Ok(acc / wsum)
    } else {
        Err(CalibrationError::OutsideSupport(p.x, p.y))
    }
}

/// Like [`undistort_point`], also reporting whether `p` lies outside the
/// convex hull of the control points (an extrapolated value).
pub fn undistort_point_flagged(model: &LwmModel, p: &Vec2) -> Result<(Vec2, bool), CalibrationError> {
    let value = undistort_point(model, p)?;
    let centers: Vec<Vec2> = model.control_points.iter().map(|c| c.center).collect();
    Ok((value, !inside_convex_hull(&centers, p)))
}

fn cross(o: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn inside_convex_hull(points: &[Vec2], p: &Vec2) -> bool {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return false;
    }
    // Andrew's monotone chain, counter-clockwise.
    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vec2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for q in iter {
            while hull.len() >= start + 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], q) <= 0.0 {
                hull.pop();
            }
            hull.push(*q);
        }
        hull.pop();
    }
    let n = hull.len();
    (0..n).all(|i| cross(&hull[i], &hull[(i + 1) % n], p) >= -1e-9)
}
