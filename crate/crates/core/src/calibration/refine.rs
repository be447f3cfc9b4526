use nalgebra::{DMatrix, DVector};

use super::dlt::normalize_projection;
use super::{CalibrationError, Correspondence3D2D};
use crate::geometry::Mat34;

/// Consecutive rejected damping escalations tolerated before giving up.
const MAX_ESCALATIONS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    pub projection: Mat34,
    pub iterations: usize,
    pub initial_cost: f64,
    pub final_cost: f64,
}

/// Residual vector `[u_i - x_i, v_i - y_i, ...]`, or `None` if a point falls
/// behind the camera.
fn residuals(p: &Mat34, corr: &[Correspondence3D2D]) -> Option<DVector<f64>> {
    let mut r = DVector::zeros(2 * corr.len());
    for (i, c) in corr.iter().enumerate() {
        let h = p * c.world.push(1.0);
        if !(h.z > 0.0) {
            return None;
        }
        r[2 * i] = h.x / h.z - c.image.x;
        r[2 * i + 1] = h.y / h.z - c.image.y;
    }
    Some(r)
}

/// Jacobian of the residuals with respect to the 12 entries of `P`
/// (row-major), before the fixed entry is removed.
fn jacobian(p: &Mat34, corr: &[Correspondence3D2D]) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * corr.len(), 12);
    for (i, c) in corr.iter().enumerate() {
        let x = c.world.push(1.0);
        let h = p * x;
        let (a, b, w) = (h.x, h.y, h.z);
        for k in 0..4 {
            j[(2 * i, k)] = x[k] / w;
            j[(2 * i, 8 + k)] = -a * x[k] / (w * w);
            j[(2 * i + 1, 4 + k)] = x[k] / w;
            j[(2 * i + 1, 8 + k)] = -b * x[k] / (w * w);
        }
    }
    j
}

/// Levenberg-Marquardt minimization of squared pixel reprojection error
/// over the entries of `P`, with the largest-magnitude entry of `p0` held
/// fixed to remove the scale freedom (11 free parameters).
///
/// Stops when the step norm falls below `tol` relative to the parameter
/// norm, or after `max_iters` accepted steps. The cost never increases.
pub fn refine_projection(
    p0: &Mat34,
    correspondences: &[Correspondence3D2D],
    max_iters: usize,
    tol: f64,
) -> Result<RefineOutcome, CalibrationError> {
    if correspondences.len() < 6 {
        return Err(CalibrationError::InsufficientPoints {
            needed: 6,
            got: correspondences.len(),
        });
    }
    let sv = p0.svd(false, false).singular_values;
    if !(sv.min() > 1e-12 * sv.max()) {
        return Err(CalibrationError::RankDeficientProjection);
    }

    let fixed = p0
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .expect("3x4 matrix");
    // nalgebra stores column-major; the Jacobian uses row-major indices.
    let fixed_rm = (fixed % 3) * 4 + fixed / 3;
    let free: Vec<usize> = (0..12).filter(|&k| k != fixed_rm).collect();

    let mut p = *p0;
    let Some(mut r) = residuals(&p, correspondences) else {
        return Err(CalibrationError::InvalidInput(
            "initial projection puts points behind the camera".into(),
        ));
    };
    let initial_cost = 0.5 * r.norm_squared();
    let mut cost = initial_cost;
    let mut mu = 1e-3;
    let mut iterations = 0;
    let mut accepted_any = false;
    let mut escalations = 0;

    while iterations < max_iters && cost > 0.0 {
        let j_full = jacobian(&p, correspondences);
        let j = j_full.select_columns(&free);
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        if g.amax() == 0.0 {
            break;
        }
        let mut a = jtj.clone();
        for d in 0..a.nrows() {
            a[(d, d)] += mu * jtj[(d, d)].max(1e-300);
        }
        let Some(chol) = a.cholesky() else {
            mu *= 10.0;
            escalations += 1;
            if escalations >= MAX_ESCALATIONS {
                break;
            }
            continue;
        };
        let delta = -chol.solve(&g);
        let mut candidate = p;
        for (k, &idx) in free.iter().enumerate() {
            candidate[(idx / 4, idx % 4)] += delta[k];
        }
        let new_r = residuals(&candidate, correspondences);
        let new_cost = new_r.as_ref().map(|r| 0.5 * r.norm_squared());
        match (new_r, new_cost) {
            (Some(nr), Some(nc)) if nc < cost => {
                let param_norm = free
                    .iter()
                    .map(|&idx| p[(idx / 4, idx % 4)].powi(2))
                    .sum::<f64>()
                    .sqrt();
                p = candidate;
                r = nr;
                cost = nc;
                mu = (mu / 10.0).max(1e-12);
                iterations += 1;
                accepted_any = true;
                escalations = 0;
                if delta.norm() < tol * (param_norm + tol) {
                    break;
                }
            }
            _ => {
                mu *= 10.0;
                escalations += 1;
                if escalations >= MAX_ESCALATIONS {
                    if !accepted_any && g.norm() > 1e-9 * (1.0 + cost) {
                        return Err(CalibrationError::DivergedError);
                    }
                    break;
                }
            }
        }
    }

    let projection = if accepted_any {
        normalize_projection(&p, correspondences)
    } else {
        *p0
    };
    Ok(RefineOutcome {
        projection,
        iterations,
        initial_cost,
        final_cost: cost,
    })
}
