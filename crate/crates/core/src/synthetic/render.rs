use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::SyntheticError;
use crate::geometry::{project, CameraParameters, Curve3D, Polyline2D, Vec2, ViewId};
use crate::predictor::FrameTensor;
use crate::reconstruction::StereoRig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    /// Rendered frame side, pixels.
    pub image_size: usize,
    /// Gaussian jitter added to annotation vertices, native pixels.
    pub noise_px: f64,
    pub seed: u64,
    /// Frames per sample window.
    pub seq_len: usize,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            image_size: 64,
            noise_px: 0.0,
            seed: 0,
            seq_len: 4,
        }
    }
}

/// One time step: ground truth, both annotations and the window of view-A
/// frames ending at this step (oldest first).
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub truth: Curve3D,
    pub poly_a: Polyline2D,
    pub poly_b: Polyline2D,
    pub frames_a: Vec<FrameTensor>,
    pub rig: StereoRig,
}

/// Projects every curve point; fails when one leaves `[0, w] x [0, h]`.
pub fn project_polyline(
    cam: &CameraParameters,
    curve: &Curve3D,
    view: ViewId,
    frame_index: usize,
    image_size: (usize, usize),
) -> Result<Polyline2D, SyntheticError> {
    let (w, h) = (image_size.0 as f64, image_size.1 as f64);
    let mut pts: Vec<Vec2> = Vec::with_capacity(curve.len());
    for p in curve.points() {
        let x = project(cam, p)?;
        if !(x.x >= 0.0 && x.x <= w && x.y >= 0.0 && x.y <= h) {
            return Err(SyntheticError::OutOfBounds {
                frame: frame_index,
                view: match view {
                    ViewId::A => 'A',
                    ViewId::B => 'B',
                },
            });
        }
        if pts.last() != Some(&x) {
            pts.push(x);
        }
    }
    Ok(Polyline2D::new(pts, view, frame_index)?)
}

/// Anti-aliased 1 px stroke: each pixel takes `max(0, 1 - d)` where `d` is
/// the distance from its center to the polyline, after scaling native
/// coordinates by `size / native_width`.
pub fn render_polyline(poly: &Polyline2D, native_width: usize, size: usize) -> FrameTensor {
    let scale = size as f64 / native_width as f64;
    let pts: Vec<Vec2> = poly.points().iter().map(|p| p * scale).collect();
    let mut frame = FrameTensor::zeros(size, size);
    let max_idx = size as i64 - 1;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let x0 = ((a.x.min(b.x) - 1.5).floor() as i64).clamp(0, max_idx);
        let x1 = ((a.x.max(b.x) + 1.5).ceil() as i64).clamp(0, max_idx);
        let y0 = ((a.y.min(b.y) - 1.5).floor() as i64).clamp(0, max_idx);
        let y1 = ((a.y.max(b.y) + 1.5).ceil() as i64).clamp(0, max_idx);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let c = Vec2::new(x as f64 + 0.5, y as f64 + 0.5);
                let v = 1.0 - crate::geometry::point_segment_distance_2d(&c, &a, &b);
                let (xu, yu) = (x as usize, y as usize);
                if v > frame.get(xu, yu) {
                    frame.set(xu, yu, v);
                }
            }
        }
    }
    frame
}

fn jitter(poly: &Polyline2D, noise: &Normal<f64>, rng: &mut ChaCha8Rng) -> Result<Polyline2D, SyntheticError> {
    let pts = poly
        .points()
        .iter()
        .map(|p| p + Vec2::new(noise.sample(rng), noise.sample(rng)))
        .collect();
    Ok(Polyline2D::new(pts, poly.view, poly.frame_index)?)
}

/// Projects and renders every curve of `trajectory`. Sample `t` holds frames
/// `t - seq_len + 1 ..= t`; indices before the first frame repeat frame 0.
/// Frames show the exact projection; only the annotations carry noise.
pub fn render_sequence(
    trajectory: &[Curve3D],
    rig: &StereoRig,
    cfg: &RenderConfig,
) -> Result<Vec<SyntheticSample>, SyntheticError> {
    if cfg.image_size == 0 || cfg.seq_len == 0 || !(cfg.noise_px >= 0.0) {
        return Err(SyntheticError::InvalidParams(format!("{cfg:?}")));
    }
    let noise = Normal::new(0.0, cfg.noise_px).map_err(|e| SyntheticError::InvalidParams(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut exact = Vec::with_capacity(trajectory.len());
    let mut frames = Vec::with_capacity(trajectory.len());
    for (t, curve) in trajectory.iter().enumerate() {
        let a = project_polyline(&rig.cam_a, curve, ViewId::A, t, rig.image_size)?;
        let b = project_polyline(&rig.cam_b, curve, ViewId::B, t, rig.image_size)?;
        frames.push(render_polyline(&a, rig.image_size.0, cfg.image_size));
        exact.push((a, b));
    }
    let mut out = Vec::with_capacity(trajectory.len());
    for (t, (a, b)) in exact.into_iter().enumerate() {
        let (poly_a, poly_b) = if cfg.noise_px > 0.0 {
            (jitter(&a, &noise, &mut rng)?, jitter(&b, &noise, &mut rng)?)
        } else {
            (a, b)
        };
        let frames_a = (0..cfg.seq_len)
            .map(|k| {
                let idx = (t + k + 1).saturating_sub(cfg.seq_len);
                frames[idx].clone()
            })
            .collect();
        out.push(SyntheticSample {
            truth: trajectory[t].clone(),
            poly_a,
            poly_b,
            frames_a,
            rig: rig.clone(),
        });
    }
    Ok(out)
}

fn orient(a: &Vec2, b: &Vec2, c: &Vec2) -> f64 {
    (b - a).perp(&(c - a))
}

/// Proper crossing of segments `p1 p2` and `q1 q2`.
pub fn segments_intersect(p1: &Vec2, p2: &Vec2, q1: &Vec2, q2: &Vec2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Whether any two non-adjacent segments cross.
pub fn self_intersects(poly: &Polyline2D) -> bool {
    let p = poly.points();
    let n = p.len();
    (0..n.saturating_sub(1)).any(|i| (i + 2..n - 1).any(|j| segments_intersect(&p[i], &p[i + 1], &p[j], &p[j + 1])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::synthetic::{default_rig, gen_curve, CurveGenParams};

    #[test]
    fn vertical_line_renders_one_column_band() {
        let rig = default_rig();
        let curve = Curve3D::new((0..=40).map(|i| Vec3::new(0.0, -20.0 + i as f64, 0.0)).collect()).unwrap();
        let s = render_sequence(&[curve], &rig, &RenderConfig::default()).unwrap();
        let f = &s[0].frames_a[0];
        for y in 0..f.height {
            for x in 0..f.width {
                if f.get(x, y) > 0.0 {
                    assert!((31..=32).contains(&x), "pixel {x},{y}");
                }
            }
        }
        assert!(f.pixels.iter().any(|&v| v > 0.0));
    }

    #[test]
    fn exact_annotations_without_noise() {
        let rig = default_rig();
        let c = gen_curve(&CurveGenParams::default()).unwrap();
        let s = render_sequence(std::slice::from_ref(&c), &rig, &RenderConfig::default()).unwrap();
        for (p, q) in c.points().iter().zip(s[0].poly_a.points()) {
            let x = project(&rig.cam_a, p).unwrap();
            assert!((x - q).norm() < 1e-12);
        }
    }

    #[test]
    fn mean_intensity_matches_stroke_area() {
        let rig = default_rig();
        for seed in 0..10 {
            let c = gen_curve(&CurveGenParams {
                seed,
                loop_probability: 0.0,
                ..Default::default()
            })
            .unwrap();
            let s = render_sequence(&[c], &rig, &RenderConfig::default()).unwrap();
            let f = &s[0].frames_a[0];
            let len = s[0].poly_a.length() * 64.0 / 1024.0;
            let expected = len / (64.0 * 64.0);
            let rel = (f.mean() - expected).abs() / expected;
            assert!(rel < 0.2, "seed {seed}: {} vs {expected}", f.mean());
        }
    }

    #[test]
    fn window_pads_with_first_frame() {
        let rig = default_rig();
        let c = gen_curve(&CurveGenParams::default()).unwrap();
        let traj = crate::synthetic::advancing_trajectory(&c, 3, 4.0).unwrap();
        let s = render_sequence(&traj, &rig, &RenderConfig::default()).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[0].frames_a[0], s[0].frames_a[3]);
        assert_eq!(s[2].frames_a[1], s[0].frames_a[3]);
        assert_ne!(s[2].frames_a[3], s[2].frames_a[2]);
    }

    #[test]
    fn crossing_segments() {
        let o = Vec2::zeros();
        assert!(segments_intersect(
            &o,
            &Vec2::new(2.0, 2.0),
            &Vec2::new(0.0, 2.0),
            &Vec2::new(2.0, 0.0)
        ));
        assert!(!segments_intersect(
            &o,
            &Vec2::new(1.0, 0.0),
            &Vec2::new(0.0, 1.0),
            &Vec2::new(1.0, 1.0)
        ));
    }

    #[test]
    fn out_of_bounds() {
        let rig = default_rig();
        let c = Curve3D::new(vec![Vec3::zeros(), Vec3::new(500.0, 0.0, 0.0)]).unwrap();
        assert!(matches!(
            render_sequence(&[c], &rig, &RenderConfig::default()),
            Err(SyntheticError::OutOfBounds { frame: 0, .. })
        ));
    }
}
