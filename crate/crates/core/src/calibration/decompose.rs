use nalgebra::Matrix3;

use super::CalibrationError;
use crate::geometry::{Mat3, Mat34, Vec3};

/// RQ decomposition of `P = lambda K [R | t]` with `K` upper-triangular,
/// positive diagonal and `K[2,2] = 1`, and `R` a proper rotation.
///
/// The overall sign of `P` is free, so a left block with negative
/// determinant is negated first.
pub fn decompose_projection(p: &Mat34) -> Result<(Mat3, Mat3, Vec3), CalibrationError> {
    if !p.iter().all(|v| v.is_finite()) {
        return Err(CalibrationError::InvalidInput("non-finite projection".into()));
    }
    let mut m: Mat3 = p.fixed_view::<3, 3>(0, 0).into_owned();
    let mut p4: Vec3 = p.column(3).into_owned();
    let scale = m.norm();
    let det = m.determinant();
    if scale == 0.0 || det.abs() <= 1e-12 * scale.powi(3) {
        return Err(CalibrationError::SingularLeftBlock);
    }
    if det < 0.0 {
        m = -m;
        p4 = -p4;
    }

    // RQ via QR of the row-reversed transpose.
    let flip = Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0);
    let qr = (flip * m).transpose().qr();
    let mut k = flip * qr.r().transpose() * flip;
    let mut r = flip * qr.q().transpose();
    for i in 0..3 {
        if k[(i, i)] < 0.0 {
            k.column_mut(i).neg_mut();
            r.row_mut(i).neg_mut();
        }
    }
    let t = k.try_inverse().ok_or(CalibrationError::SingularLeftBlock)? * p4;
    let lambda = k[(2, 2)];
    k /= lambda;
    k[(1, 0)] = 0.0;
    k[(2, 0)] = 0.0;
    k[(2, 1)] = 0.0;
    Ok((k, r, t))
}
