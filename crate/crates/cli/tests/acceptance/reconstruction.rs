use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wirerecon_core::metrics::compare_shapes;
use wirerecon_core::reconstruction::{reconstruct_curve_with, ReconstructionConfig};
use wirerecon_core::synthetic::{RenderConfig, SynthParams};

use crate::common::{in_view_sample, median};
use crate::Outcome;

fn bench(loop_probability: f64, noise_px: f64) -> SynthParams {
    let mut p = SynthParams::default();
    p.curve.loop_probability = loop_probability;
    p.render = RenderConfig {
        noise_px,
        ..RenderConfig::default()
    };
    p
}

pub fn noise_free() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for i in 0..100 {
        let params = bench(if i % 5 == 0 { 1.0 } else { 0.0 }, 0.0);
        let s = in_view_sample(&params, &mut rng);
        match reconstruct_curve_with(&s.rig, &s.poly_a, &s.poly_b, 1.0, &ReconstructionConfig::default()) {
            Ok(c) => worst = worst.max(compare_shapes(&c, &s.truth, 1.0).unwrap().max_ed),
            Err(_) => failures += 1,
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        worst < 1e-3 && failures == 0 && secs < 30.0,
        format!("100 curves (20 with loops), worst MaxED {worst:.2e} mm (< 1e-3), {failures} failures, {secs:.1} s (< 30 s)"),
    )
}

pub fn noisy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = ReconstructionConfig {
        smoothing_mm: 1.5,
        ..Default::default()
    };
    let mut errors = Vec::with_capacity(200);
    for _ in 0..200 {
        let s = in_view_sample(&bench(0.2, 1.0), &mut rng);
        let e = reconstruct_curve_with(&s.rig, &s.poly_a, &s.poly_b, 1.0, &cfg)
            .map(|c| compare_shapes(&c, &s.truth, 1.0).unwrap().max_ed)
            .unwrap_or(f64::INFINITY);
        errors.push(e);
    }
    let m = median(&mut errors);
    Outcome::new(
        m < 2.0,
        format!("200 trials at 1 px jitter, median MaxED {m:.3} mm (< 2 mm)"),
    )
}
