use nalgebra::{DMatrix, Matrix3, Matrix4};

use super::{CalibrationError, Correspondence3D2D};
use crate::geometry::{project_with_matrix, Mat34, Vec2, Vec3};

/// Condition number of the design matrix (largest over second-smallest
/// singular value) above which the configuration is rejected.
const MAX_CONDITION: f64 = 1e12;

fn normalize_2d(points: &[Vec2]) -> Matrix3<f64> {
    let n = points.len() as f64;
    let c = points.iter().fold(Vec2::zeros(), |a, p| a + p) / n;
    let mean_dist = points.iter().map(|p| (p - c).norm()).sum::<f64>() / n;
    let s = if mean_dist > 0.0 {
        std::f64::consts::SQRT_2 / mean_dist
    } else {
        1.0
    };
    Matrix3::new(s, 0.0, -s * c.x, 0.0, s, -s * c.y, 0.0, 0.0, 1.0)
}

fn normalize_3d(points: &[Vec3]) -> Matrix4<f64> {
    let n = points.len() as f64;
    let c = points.iter().fold(Vec3::zeros(), |a, p| a + p) / n;
    let mean_dist = points.iter().map(|p| (p - c).norm()).sum::<f64>() / n;
    let s = if mean_dist > 0.0 { 3f64.sqrt() / mean_dist } else { 1.0 };
    #[rustfmt::skip]
    let t = Matrix4::new(
        s, 0.0, 0.0, -s * c.x,
        0.0, s, 0.0, -s * c.y,
        0.0, 0.0, s, -s * c.z,
        0.0, 0.0, 0.0, 1.0,
    );
    t
}

/// Scales `p` so the first three entries of its last row have unit norm and
/// points in front of the camera have positive homogeneous depth.
pub(crate) fn normalize_projection(p: &Mat34, correspondences: &[Correspondence3D2D]) -> Mat34 {
    let n = p.fixed_view::<1, 3>(2, 0).norm();
    let mut out = p / n;
    let depth_sum: f64 = correspondences
        .iter()
        .map(|c| (out.row(2) * c.world.push(1.0))[0])
        .sum();
    if depth_sum < 0.0 {
        out = -out;
    }
    out
}

/// Direct linear transform on Hartley-normalized coordinates.
///
/// The result is scaled so that `||P[2, 0..3]|| = 1`, with the sign chosen
/// so the correspondences have positive depth.
pub fn dlt(correspondences: &[Correspondence3D2D]) -> Result<Mat34, CalibrationError> {
    let n = correspondences.len();
    if n < 6 {
        return Err(CalibrationError::InsufficientPoints { needed: 6, got: n });
    }
    if !correspondences
        .iter()
        .all(|c| c.world.iter().chain(c.image.iter()).all(|v| v.is_finite()))
    {
        return Err(CalibrationError::InvalidInput("non-finite correspondence".into()));
    }
    let images: Vec<Vec2> = correspondences.iter().map(|c| c.image).collect();
    let worlds: Vec<Vec3> = correspondences.iter().map(|c| c.world).collect();
    let t2 = normalize_2d(&images);
    let t3 = normalize_3d(&worlds);

    let mut a = DMatrix::<f64>::zeros(2 * n, 12);
    for (i, c) in correspondences.iter().enumerate() {
        let xw = t3 * c.world.push(1.0);
        let xi = t2 * c.image.push(1.0);
        let (u, v) = (xi.x / xi.z, xi.y / xi.z);
        for k in 0..4 {
            a[(2 * i, k)] = xw[k];
            a[(2 * i, 8 + k)] = -u * xw[k];
            a[(2 * i + 1, 4 + k)] = xw[k];
            a[(2 * i + 1, 8 + k)] = -v * xw[k];
        }
    }

    let svd = a.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let smax = svd.singular_values[order[0]];
    let second_smallest = svd.singular_values[order[order.len() - 2]];
    let condition = if second_smallest > 0.0 {
        smax / second_smallest
    } else {
        f64::INFINITY
    };
    if !(condition <= MAX_CONDITION) {
        return Err(CalibrationError::DegenerateConfiguration(condition));
    }
    let h = v_t.row(order[order.len() - 1]);
    let mut pn = Mat34::zeros();
    for r in 0..3 {
        for c in 0..4 {
            pn[(r, c)] = h[4 * r + c];
        }
    }
    let t2_inv = t2.try_inverse().expect("normalization is invertible");
    let p = t2_inv * pn * t3;
    Ok(normalize_projection(&p, correspondences))
}

/// Pixel reprojection error per correspondence; points behind the camera
/// get an infinite error.
pub fn reprojection_errors(p: &Mat34, correspondences: &[Correspondence3D2D]) -> Vec<f64> {
    correspondences
        .iter()
        .map(|c| match project_with_matrix(p, &c.world) {
            Ok(x) => (x - c.image).norm(),
            Err(_) => f64::INFINITY,
        })
        .collect()
}

pub fn rms_reprojection_error(p: &Mat34, correspondences: &[Correspondence3D2D]) -> f64 {
    let errs = reprojection_errors(p, correspondences);
    (errs.iter().map(|e| e * e).sum::<f64>() / errs.len().max(1) as f64).sqrt()
}
