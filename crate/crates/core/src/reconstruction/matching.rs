use nalgebra::Vector3;

use super::{ReconstructionError, StereoRig};
use crate::geometry::{Polyline2D, Vec2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchConfig {
    /// Maximum pixel spacing of samples along polyline A. Vertices of A are
    /// always sampled.
    pub step_px: f64,
    /// Endpoints of B within this distance of an epipolar line become
    /// candidates even when the line misses the polyline.
    pub epipolar_band_px: f64,
    /// Weight of the penalty on deviations of the arclength rate
    /// `ds_B / ds_A` from the global length ratio.
    pub smoothness_weight: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            step_px: 1.0,
            epipolar_band_px: 2.0,
            smoothness_weight: 1.0,
        }
    }
}

/// Result of aligning polyline B to the samples of polyline A.
#[derive(Debug, Clone, PartialEq)]
pub struct PolylineMatch {
    /// Matched `(x_a, x_b)` pixel pairs in tip-first order.
    pub pairs: Vec<(Vec2, Vec2)>,
    /// Arclength of each pair along A and along B, pixels.
    pub arclength_a: Vec<f64>,
    pub arclength_b: Vec<f64>,
    /// Indices (into the A samples) whose epipolar line found no
    /// consistent partner on B.
    pub dropped: Vec<usize>,
    pub sample_count: usize,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    s_b: f64,
    point: Vec2,
    residual: f64,
}

/// Samples of A: all vertices plus equal subdivisions of each segment so
/// that no gap exceeds `step`.
fn sample_a(poly: &Polyline2D, step: f64) -> Vec<(f64, Vec2)> {
    let pts = poly.points();
    let mut out = vec![(0.0, pts[0])];
    let mut s = 0.0;
    for w in pts.windows(2) {
        let e = w[1] - w[0];
        let len = e.norm();
        let pieces = (len / step).ceil().max(1.0) as usize;
        for k in 1..=pieces {
            let t = k as f64 / pieces as f64;
            out.push((s + len * t, w[0] + e * t));
        }
        s += len;
    }
    out
}

fn cumulative(pts: &[Vec2]) -> Vec<f64> {
    let mut c = Vec::with_capacity(pts.len());
    let mut s = 0.0;
    c.push(0.0);
    for w in pts.windows(2) {
        s += (w[1] - w[0]).norm();
        c.push(s);
    }
    c
}

fn candidates_on_line(line: &Vector3<f64>, pts: &[Vec2], cum: &[f64], band: f64) -> Vec<Candidate> {
    let dist = |p: &Vec2| line.x * p.x + line.y * p.y + line.z;
    let mut out: Vec<Candidate> = Vec::new();
    let push = |c: Candidate, out: &mut Vec<Candidate>| {
        if !out.iter().any(|o| (o.s_b - c.s_b).abs() < 1e-9) {
            out.push(c);
        }
    };
    for j in 0..pts.len() - 1 {
        let (d0, d1) = (dist(&pts[j]), dist(&pts[j + 1]));
        let seg_len = cum[j + 1] - cum[j];
        if d0 == 0.0 && d1 == 0.0 {
            for (t, p) in [(0.0, pts[j]), (1.0, pts[j + 1])] {
                push(
                    Candidate {
                        s_b: cum[j] + t * seg_len,
                        point: p,
                        residual: 0.0,
                    },
                    &mut out,
                );
            }
            continue;
        }
        if (d0 <= 0.0 && d1 >= 0.0) || (d0 >= 0.0 && d1 <= 0.0) {
            let t = (d0 / (d0 - d1)).clamp(0.0, 1.0);
            push(
                Candidate {
                    s_b: cum[j] + t * seg_len,
                    point: pts[j] + (pts[j + 1] - pts[j]) * t,
                    residual: 0.0,
                },
                &mut out,
            );
        }
    }
    // Near-tangent contacts: interior vertices where B approaches the line
    // without crossing it, plus the two ends.
    let n = pts.len();
    let near = (1..n - 1).filter(|&j| {
        let (dp, d, dn) = (dist(&pts[j - 1]), dist(&pts[j]), dist(&pts[j + 1]));
        dp * d > 0.0 && dn * d > 0.0 && d.abs() <= dp.abs() && d.abs() <= dn.abs()
    });
    for idx in [0, n - 1].into_iter().chain(near) {
        let p = pts[idx];
        let d = dist(&p).abs();
        if d <= band {
            push(
                Candidate {
                    s_b: cum[idx],
                    point: p,
                    residual: d,
                },
                &mut out,
            );
        }
    }
    out
}

/// [`match_polylines_with`] using a custom sample spacing and default
/// band/smoothness settings.
pub fn match_polylines(
    rig: &StereoRig,
    poly_a: &Polyline2D,
    poly_b: &Polyline2D,
    delta_u_px: f64,
) -> Result<PolylineMatch, ReconstructionError> {
    let cfg = MatchConfig {
        step_px: delta_u_px,
        ..MatchConfig::default()
    };
    match_polylines_with(rig, poly_a, poly_b, &cfg)
}

/// Matches samples of A to points of B on their epipolar lines.
///
/// Each sample's epipolar line is intersected with every segment of B.
/// When a line crosses B several times (loops, self-occlusion), a dynamic
/// program picks one candidate per sample so that B arclength strictly
/// increases with A arclength. It maximizes the number of matched samples,
/// then minimizes squared epipolar residual plus a penalty on deviations of
/// the arclength rate `ds_B / ds_A` from the global length ratio.
/// Both inputs must be in ideal (undistorted) pixel coordinates.
pub fn match_polylines_with(
    rig: &StereoRig,
    poly_a: &Polyline2D,
    poly_b: &Polyline2D,
    cfg: &MatchConfig,
) -> Result<PolylineMatch, ReconstructionError> {
    if !(cfg.step_px > 0.0) {
        return Err(ReconstructionError::Geometry(
            crate::geometry::GeometryError::DegenerateCurve(format!(
                "matching step must be positive, got {}",
                cfg.step_px
            )),
        ));
    }
    let samples = sample_a(poly_a, cfg.step_px);
    let b_pts = poly_b.points();
    let b_cum = cumulative(b_pts);
    let rate = b_cum[b_cum.len() - 1] / poly_a.length();

    let cands: Vec<Vec<Candidate>> = samples
        .iter()
        .map(|(_, a)| {
            let mut l = rig.fundamental * Vector3::new(a.x, a.y, 1.0);
            let n = l.x.hypot(l.y);
            if n > 0.0 {
                l /= n;
            }
            candidates_on_line(&l, b_pts, &b_cum, cfg.epipolar_band_px)
        })
        .collect();

    // Flattened DP nodes, in sample order.
    struct Node {
        sample: usize,
        cand: usize,
        count: usize,
        cost: f64,
        prev: Option<usize>,
    }
    let mut nodes: Vec<Node> = Vec::new();
    for (k, cs) in cands.iter().enumerate() {
        for (ci, c) in cs.iter().enumerate() {
            let own = c.residual * c.residual;
            let mut best = Node {
                sample: k,
                cand: ci,
                count: 1,
                cost: own,
                prev: None,
            };
            for (idx, prev) in nodes.iter().enumerate() {
                let pc = &cands[prev.sample][prev.cand];
                if prev.sample == k || pc.s_b >= c.s_b {
                    continue;
                }
                let ds_a = samples[k].0 - samples[prev.sample].0;
                let ds_b = c.s_b - pc.s_b;
                let dev = ds_b - rate * ds_a;
                let cost = prev.cost + own + cfg.smoothness_weight * dev * dev / ds_a.max(1e-12);
                let count = prev.count + 1;
                if count > best.count || (count == best.count && cost < best.cost) {
                    best.count = count;
                    best.cost = cost;
                    best.prev = Some(idx);
                }
            }
            nodes.push(best);
        }
    }

    let Some(end) = (0..nodes.len()).reduce(|b, i| {
        let (nb, ni) = (&nodes[b], &nodes[i]);
        if ni.count > nb.count || (ni.count == nb.count && ni.cost < nb.cost) {
            i
        } else {
            b
        }
    }) else {
        return Err(ReconstructionError::NoOverlap);
    };

    let mut chain = Vec::new();
    let mut cur = Some(end);
    while let Some(i) = cur {
        chain.push(i);
        cur = nodes[i].prev;
    }
    chain.reverse();

    let mut matched = vec![false; samples.len()];
    let mut out = PolylineMatch {
        pairs: Vec::with_capacity(chain.len()),
        arclength_a: Vec::with_capacity(chain.len()),
        arclength_b: Vec::with_capacity(chain.len()),
        dropped: Vec::new(),
        sample_count: samples.len(),
    };
    for i in chain {
        let n = &nodes[i];
        let c = &cands[n.sample][n.cand];
        matched[n.sample] = true;
        out.pairs.push((samples[n.sample].1, c.point));
        out.arclength_a.push(samples[n.sample].0);
        out.arclength_b.push(c.s_b);
    }
    out.dropped = (0..samples.len()).filter(|&k| !matched[k]).collect();
    Ok(out)
}
