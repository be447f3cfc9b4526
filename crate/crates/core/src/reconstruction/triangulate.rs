use nalgebra::{Matrix4, RowVector4};

use super::{ReconstructionError, StereoRig};
use crate::geometry::{all_finite, GeometryError, Mat34, Vec2, Vec3};

/// Rays closer to parallel than this are rejected.
pub const MIN_RAY_ANGLE_DEG: f64 = 0.1;

/// Linear triangulation: the smallest right singular vector of the 4x4
/// system `x P3 - P1`, `y P3 - P2` stacked for both views.
///
/// World coordinates are rescaled by the mean camera distance before the
/// solve so the homogeneous unknown is well balanced.
pub fn triangulate(rig: &StereoRig, x_a: &Vec2, x_b: &Vec2) -> Result<Vec3, ReconstructionError> {
    if !all_finite(x_a.iter().chain(x_b.iter())) {
        return Err(GeometryError::NonFiniteInput.into());
    }
    let da = rig.cam_a.ray_direction(x_a);
    let db = rig.cam_b.ray_direction(x_b);
    let angle = da.dot(&db).abs().min(1.0).acos().to_degrees();
    if angle < MIN_RAY_ANGLE_DEG {
        return Err(ReconstructionError::IllConditioned(angle));
    }

    let scale = 0.5 * (rig.cam_a.center().norm() + rig.cam_b.center().norm());
    let s = if scale > 0.0 { scale } else { 1.0 };
    let unscale = |p: &Mat34| {
        let mut q = *p;
        for r in 0..3 {
            for c in 0..3 {
                q[(r, c)] *= s;
            }
        }
        q
    };
    let pa = unscale(&rig.cam_a.p);
    let pb = unscale(&rig.cam_b.p);

    let mut a = Matrix4::<f64>::zeros();
    let rows = [
        pa.row(2) * x_a.x - pa.row(0),
        pa.row(2) * x_a.y - pa.row(1),
        pb.row(2) * x_b.x - pb.row(0),
        pb.row(2) * x_b.y - pb.row(1),
    ];
    for (i, row) in rows.iter().enumerate() {
        let n = row.norm();
        let row: RowVector4<f64> = if n > 0.0 { row / n } else { *row };
        a.set_row(i, &row);
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (imin, _) = svd.singular_values.argmin();
    let h = v_t.row(imin);
    if h[3].abs() < 1e-15 {
        return Err(ReconstructionError::IllConditioned(angle));
    }
    let x = Vec3::new(h[0] / h[3], h[1] / h[3], h[2] / h[3]) * s;
    if rig.cam_a.depth(&x) <= 0.0 {
        return Err(ReconstructionError::BehindCamera('A'));
    }
    if rig.cam_b.depth(&x) <= 0.0 {
        return Err(ReconstructionError::BehindCamera('B'));
    }
    Ok(x)
}
