use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wirerecon_core::curve_repr::{AngularOffset, SphericalCurve};
use wirerecon_core::geometry::Vec3;
use wirerecon_core::predictor::{
    build_dataset, embed_frame, embed_frame_grad, evaluate_metrics, forward, gru_step, gru_step_grad, loss_and_grad,
    total_loss, train, FrameTensor, ModelConfig, ModelParams, PredictionOutput, Representation, Target, TrainingConfig,
};
use wirerecon_core::synthetic::SynthParams;

use crate::Outcome;

const EPS: f64 = 1e-5;

fn small_config(rep: Representation) -> ModelConfig {
    ModelConfig {
        image_size: 16,
        patch_size: 8,
        feature_dim: 5,
        hidden_dim: 4,
        max_segments: 6,
        representation: rep,
        tip_scale_mm: 3.0,
        offset_scale_mm: 2.0,
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn random_params(cfg: &ModelConfig, rng: &mut ChaCha8Rng) -> ModelParams {
    let mut p = ModelParams::init(cfg, rng.random()).unwrap();
    for t in p.tensors_mut() {
        for v in t.iter_mut() {
            *v += rng.random_range(-0.5..0.5);
        }
    }
    p
}

fn random_frame(rng: &mut ChaCha8Rng) -> FrameTensor {
    let mut f = FrameTensor::zeros(16, 16);
    f.pixels.iter_mut().for_each(|v| *v = rng.random());
    f
}

fn random_target(rng: &mut ChaCha8Rng, len: usize, rep: Representation) -> Target {
    let sc = SphericalCurve {
        tip: Vec3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), 0.5),
        radius: 2.0,
        offsets: (0..len)
            .map(|_| AngularOffset::from([rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)]))
            .collect(),
    };
    Target::from_spherical(&sc, rep).unwrap()
}

/// Worst relative error of `analytic` against central differences of `f`
/// over the tensors in `groups`.
fn fd_worst(
    params: &ModelParams,
    analytic: &ModelParams,
    groups: std::ops::Range<usize>,
    f: &dyn Fn(&ModelParams) -> f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    let grads = analytic.tensors();
    for g in groups {
        for i in 0..grads[g].len() {
            let mut plus = params.clone();
            plus.tensors_mut()[g][i] += EPS;
            let mut minus = params.clone();
            minus.tensors_mut()[g][i] -= EPS;
            worst = worst.max(rel_err(grads[g][i], (f(&plus) - f(&minus)) / (2.0 * EPS)));
        }
    }
    worst
}

pub fn gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let tcfg = TrainingConfig {
        lambda_tip: 0.7,
        lambda_offset: 3.0,
        lambda_stop: 1.3,
        ..Default::default()
    };
    // Tensor groups: embedder 0..2, GRU 2..11, tip head 11..13,
    // offset head 13..15, stop head 15..17.
    let names = ["embedder", "GRU", "tip head", "offset head", "stop head", "total loss"];
    let groups = [0..2, 2..11, 11..13, 13..15, 15..17, 0..17];
    let mut worst = [0.0f64; 6];
    for draw in 0..20 {
        let rep = if draw % 2 == 0 {
            Representation::Spherical
        } else {
            Representation::Cartesian
        };
        let cfg = small_config(rep);
        let p = random_params(&cfg, &mut rng);

        let frame = random_frame(&mut rng);
        let dz = DVector::from_fn(cfg.feature_dim, |_, _| rng.random_range(-1.0..1.0));
        let mut g = ModelParams::zeros(&cfg).unwrap();
        g.embedder = embed_frame_grad(&p, &frame, &dz).unwrap();
        worst[0] = worst[0].max(fd_worst(&p, &g, 0..2, &|q| embed_frame(q, &frame).unwrap().dot(&dz)));

        let z = DVector::from_fn(cfg.feature_dim, |_, _| rng.random_range(-1.0..1.0));
        let h = DVector::from_fn(cfg.hidden_dim, |_, _| rng.random_range(-1.0..1.0));
        let dh = DVector::from_fn(cfg.hidden_dim, |_, _| rng.random_range(-1.0..1.0));
        let mut g = ModelParams::zeros(&cfg).unwrap();
        g.gru = gru_step_grad(&p, &z, &h, &dh).unwrap().0;
        worst[1] = worst[1].max(fd_worst(&p, &g, 2..11, &|q| gru_step(q, &z, &h).unwrap().dot(&dh)));

        let frames: Vec<FrameTensor> = (0..3).map(|_| random_frame(&mut rng)).collect();
        let target = random_target(&mut rng, 1 + draw % cfg.max_segments, rep);
        let (_, g) = loss_and_grad(&p, &frames, &target, &tcfg).unwrap();
        let f = |q: &ModelParams| total_loss(&forward(q, &frames).unwrap(), &target, &tcfg).unwrap().0;
        for k in 2..6 {
            worst[k] = worst[k].max(fd_worst(&p, &g, groups[k].clone(), &f));
        }
    }

    let t = random_target(&mut rng, 4, Representation::Spherical);
    let mut offsets = t.offsets.clone();
    offsets.resize(12, 0.3);
    let exact = PredictionOutput {
        tip: t.tip,
        offsets,
        stop_probs: t.stop_labels(6),
        representation: Representation::Spherical,
    };
    let zero = total_loss(&exact, &t, &tcfg).unwrap().0;

    let max = worst.iter().copied().fold(0.0, f64::max);
    let parts: Vec<String> = names.iter().zip(&worst).map(|(n, w)| format!("{n} {w:.1e}")).collect();
    Outcome::new(
        max < 1e-4 && zero == 0.0,
        format!(
            "20 draws, worst relative error: {} (< 1e-4); loss at exact match {zero}",
            parts.join(", ")
        ),
    )
}

/// Epochs whose lr drop was not preceded by at least `patience` epochs
/// without a relative improvement of 1e-4 in validation loss.
fn early_reductions(log: &[(f64, f64)], patience: usize) -> (usize, Vec<usize>) {
    let mut best = f64::INFINITY;
    let mut stagnant = 0;
    let mut drops = 0;
    let mut bad = Vec::new();
    for (e, w) in log.windows(2).enumerate().skip(1) {
        // Row `e` is the first epoch after the initial evaluation.
        let val = w[0].0;
        if val < best * (1.0 - 1e-4) {
            best = val;
            stagnant = 0;
        } else {
            stagnant += 1;
        }
        if w[1].1 < w[0].1 {
            drops += 1;
            if stagnant < patience {
                bad.push(e);
            }
            stagnant = 0;
        }
    }
    (drops, bad)
}

fn mean_mete(params: &ModelParams, set: &[wirerecon_core::predictor::TrainingSample], r: f64) -> f64 {
    let m = evaluate_metrics(params, set, r, 0.5).unwrap();
    m.iter().map(|s| s.mete).sum::<f64>() / m.len() as f64
}

pub fn desk_training() -> Outcome {
    let start = Instant::now();
    let synth = SynthParams::desk_scale();
    let model = ModelConfig::desk_scale();
    let cfg = TrainingConfig {
        max_epochs: 100,
        ..TrainingConfig::desk_scale()
    };
    let train_set = build_dataset(&synth, 200, 1, cfg.radius_mm).unwrap();
    let val_set = build_dataset(&synth, 50, 2, cfg.radius_mm).unwrap();
    let result = train(&train_set, &val_set, &model, &cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();

    let initial = result.log[0].train_loss;
    let last = result.log.last().unwrap().train_loss;
    let untrained = ModelParams::init(&model, cfg.seed).unwrap();
    let mete0 = mean_mete(&untrained, &val_set, cfg.radius_mm);
    let mete1 = mean_mete(&result.params, &val_set, cfg.radius_mm);
    let rows: Vec<(f64, f64)> = result.log.iter().map(|r| (r.val_loss, r.lr)).collect();
    let (drops, bad) = early_reductions(&rows, cfg.scheduler_patience);
    Outcome::new(
        last < 0.5 * initial && mete1 <= 0.5 * mete0 && secs < 600.0 && bad.is_empty(),
        format!(
            "200 sequences, {} epochs: train loss {initial:.2} -> {last:.2} (ratio {:.3} < 0.5); \
             held-out METE {mete0:.2} -> {mete1:.2} mm (ratio {:.3} <= 0.5); {secs:.0} s (< 600 s); \
             {drops} lr reductions, {} premature",
            result.log.len() - 1,
            last / initial,
            mete1 / mete0,
            bad.len()
        ),
    )
}
