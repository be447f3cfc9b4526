use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::SyntheticError;
use crate::geometry::{arclength_resample, Curve3D, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveGenParams {
    pub n_control: usize,
    /// Arclength bounds, mm.
    pub length_range: (f64, f64),
    /// Standard deviation of the turning rate between control points, 1/mm.
    pub curvature_scale: f64,
    pub loop_probability: f64,
    /// Side of the cube the curve is placed in, centered on the origin, mm.
    pub box_size: f64,
    pub seed: u64,
}

impl Default for CurveGenParams {
    fn default() -> Self {
        Self {
            n_control: 8,
            length_range: (60.0, 150.0),
            curvature_scale: 0.02,
            loop_probability: 0.2,
            box_size: 200.0,
            seed: 0,
        }
    }
}

impl CurveGenParams {
    pub fn validate(&self) -> Result<(), SyntheticError> {
        let (lo, hi) = self.length_range;
        let ok = self.n_control >= 4
            && lo > 1.0
            && lo < hi
            && hi.is_finite()
            && self.curvature_scale >= 0.0
            && (0.0..=1.0).contains(&self.loop_probability)
            && self.box_size > 0.0;
        if ok {
            Ok(())
        } else {
            Err(SyntheticError::InvalidParams(format!("{self:?}")))
        }
    }
}

fn unit_normal(d: &Vec3) -> Vec3 {
    let helper = if d.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    d.cross(&helper).normalize()
}

fn rotate(v: &Vec3, axis: &Vec3, angle: f64) -> Vec3 {
    let (s, c) = angle.sin_cos();
    v * c + axis.cross(v) * s + axis * axis.dot(v) * (1.0 - c)
}

/// Control points of a curl starting at `start` with heading `d`: a prolate
/// cycloid in the plane orthogonal to `normal`, which crosses itself once,
/// plus a small drift along `normal` so the 3D curve does not.
fn loop_points(start: &Vec3, d: &Vec3, normal: &Vec3, radius: f64) -> Vec<Vec3> {
    let n = normal.cross(d);
    let mu = 0.4;
    let rise = 0.15 * radius;
    (1..=12)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / 12.0;
            start + d * radius * (a.sin() + mu * a) + n * radius * (1.0 - a.cos()) + normal * rise * a / (2.0 * PI)
        })
        .collect()
}

/// Centripetal Catmull-Rom spline through `ctrl`, `per_segment` samples per
/// span, ends extrapolated linearly.
pub fn catmull_rom(ctrl: &[Vec3], per_segment: usize) -> Vec<Vec3> {
    let n = ctrl.len();
    if n < 2 || per_segment == 0 {
        return ctrl.to_vec();
    }
    let mut ext = Vec::with_capacity(n + 2);
    ext.push(ctrl[0] * 2.0 - ctrl[1]);
    ext.extend_from_slice(ctrl);
    ext.push(ctrl[n - 1] * 2.0 - ctrl[n - 2]);

    let knot = |a: &Vec3, b: &Vec3| (b - a).norm().sqrt().max(1e-12);
    let mut out = Vec::with_capacity((n - 1) * per_segment + 1);
    for i in 0..n - 1 {
        let (p0, p1, p2, p3) = (ext[i], ext[i + 1], ext[i + 2], ext[i + 3]);
        let t0 = 0.0;
        let t1 = t0 + knot(&p0, &p1);
        let t2 = t1 + knot(&p1, &p2);
        let t3 = t2 + knot(&p2, &p3);
        for k in 0..per_segment {
            let t = t1 + (t2 - t1) * k as f64 / per_segment as f64;
            let a1 = p0 * ((t1 - t) / (t1 - t0)) + p1 * ((t - t0) / (t1 - t0));
            let a2 = p1 * ((t2 - t) / (t2 - t1)) + p2 * ((t - t1) / (t2 - t1));
            let a3 = p2 * ((t3 - t) / (t3 - t2)) + p3 * ((t - t2) / (t3 - t2));
            let b1 = a1 * ((t2 - t) / (t2 - t0)) + a2 * ((t - t0) / (t2 - t0));
            let b2 = a2 * ((t3 - t) / (t3 - t1)) + a3 * ((t - t1) / (t3 - t1));
            out.push(b1 * ((t2 - t) / (t2 - t1)) + b2 * ((t - t1) / (t2 - t1)));
        }
    }
    out.push(ctrl[n - 1]);
    out.dedup();
    out
}

/// Random smooth tip-first curve, resampled at 1 mm.
pub fn gen_curve(params: &CurveGenParams) -> Result<Curve3D, SyntheticError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (lo, hi) = params.length_range;
    let target = lo + (hi - lo) * rng.random_range(0.001..0.999);

    let nc = params.n_control;
    let step = target / (nc - 1) as f64;
    let with_loop = rng.random::<f64>() < params.loop_probability;
    let loop_at = rng.random_range(1..nc - 1);

    // The loop plane faces roughly between the two default viewing
    // directions so neither view sees it edge-on.
    let jitter = Vec3::new(
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
    ) * 0.1;
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let loop_normal = (Vec3::new(1.0, 0.0, 1.0).normalize() * sign + jitter).normalize();

    let mut heading = random_unit(&mut rng);
    let mut p = Vec3::zeros();
    let mut ctrl = vec![p];
    for i in 1..nc {
        if with_loop && i == loop_at {
            let mut d = heading - loop_normal * loop_normal.dot(&heading);
            if d.norm() < 0.2 {
                d = unit_normal(&loop_normal);
            }
            let d = d.normalize();
            let pts = loop_points(&p, &d, &loop_normal, 0.06 * target);
            p = *pts.last().expect("loop has points");
            ctrl.extend(pts);
            heading = d;
        }
        let axis = unit_normal(&heading);
        let axis = rotate(&axis, &heading, rng.random_range(0.0..2.0 * PI));
        let turn: f64 = params.curvature_scale * step * rng.sample::<f64, _>(StandardNormal);
        heading = rotate(&heading, &axis, turn).normalize();
        p += heading * step;
        ctrl.push(p);
    }

    let mut dense = catmull_rom(&ctrl, 24);
    // Scale so the 1 mm resampling lands on the target length; the chord
    // deficit makes correction passes worthwhile.
    let mut curve = Curve3D::new(dense.clone())?;
    let mut f = target / curve.length();
    for _ in 0..3 {
        for q in &mut dense {
            *q *= f;
        }
        curve = arclength_resample(&Curve3D::new(dense.clone())?, 1.0)?;
        f = target / curve.length();
        if (f - 1.0).abs() < 1e-12 {
            break;
        }
    }

    // Random placement keeping the bounding box inside the cube when it fits.
    let (mut mn, mut mx) = (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY));
    for q in curve.points() {
        mn = mn.inf(q);
        mx = mx.sup(q);
    }
    let half = params.box_size / 2.0;
    let mut shift = Vec3::zeros();
    for k in 0..3 {
        let lo_k = -half - mn[k];
        let hi_k = half - mx[k];
        shift[k] = if lo_k < hi_k {
            rng.random_range(lo_k..hi_k)
        } else {
            -(mn[k] + mx[k]) / 2.0
        };
    }
    Ok(curve.transformed(&crate::geometry::Mat3::identity(), &shift))
}

fn random_unit<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

/// Drops the first `s` mm of arclength.
fn suffix(curve: &Curve3D, s: f64) -> Result<Curve3D, SyntheticError> {
    if s <= 0.0 {
        return Ok(curve.clone());
    }
    let pts = curve.points();
    let mut acc = 0.0;
    for (i, w) in pts.windows(2).enumerate() {
        let l = (w[1] - w[0]).norm();
        if acc + l > s {
            let start = w[0] + (w[1] - w[0]) * ((s - acc) / l);
            let mut out = vec![start];
            let rest = &pts[i + 1..];
            if (rest[0] - start).norm() < 1e-9 {
                out.clear();
            }
            out.extend_from_slice(rest);
            return Ok(Curve3D::new(out)?);
        }
        acc += l;
    }
    Err(SyntheticError::InvalidParams(format!(
        "cannot drop {s} mm from a {acc} mm curve"
    )))
}

/// Insertion sequence ending at `full`: frame `k` of `n_frames` shows the
/// part of `full` behind the tip position `(n_frames - 1 - k) * advance_mm`
/// along it, so the tip moves forward by `advance_mm` per frame.
pub fn advancing_trajectory(full: &Curve3D, n_frames: usize, advance_mm: f64) -> Result<Vec<Curve3D>, SyntheticError> {
    if n_frames == 0 || !(advance_mm >= 0.0) {
        return Err(SyntheticError::InvalidParams(
            "need at least one frame and a nonnegative advance".into(),
        ));
    }
    (0..n_frames)
        .map(|k| suffix(full, (n_frames - 1 - k) as f64 * advance_mm))
        .collect()
}
