use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wirerecon_core::curve_repr::{AngularOffset, SphericalCurve};
use wirerecon_core::geometry::Vec3;
use wirerecon_core::predictor::{
    binary_cross_entropy, embed_frame, embed_frame_grad, forward, forward_grad, gru_step, gru_step_grad, loss_and_grad,
    total_loss, FrameTensor, ModelConfig, ModelParams, OutputGrad, PredictionOutput, Representation, Target,
    TrainingConfig,
};

const EPS: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn config(rep: Representation) -> ModelConfig {
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

fn random_frame(rng: &mut ChaCha8Rng, size: usize) -> FrameTensor {
    let mut f = FrameTensor::zeros(size, size);
    for v in f.pixels.iter_mut() {
        *v = rng.random::<f64>();
    }
    f
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

/// Perturbs the parameters more than a plain init so gates leave their
/// linear regime.
fn random_params(cfg: &ModelConfig, rng: &mut ChaCha8Rng) -> ModelParams {
    let mut p = ModelParams::init(cfg, rng.random()).unwrap();
    for t in p.tensors_mut() {
        for v in t.iter_mut() {
            *v += rng.random_range(-0.5..0.5);
        }
    }
    p
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Compares every entry of `analytic` against central differences of `f`.
fn check_params(
    params: &ModelParams,
    analytic: &ModelParams,
    groups: std::ops::Range<usize>,
    f: impl Fn(&ModelParams) -> f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    let grads = analytic.tensors();
    for g in groups {
        for i in 0..grads[g].len() {
            let mut plus = params.clone();
            plus.tensors_mut()[g][i] += EPS;
            let mut minus = params.clone();
            minus.tensors_mut()[g][i] -= EPS;
            let fd = (f(&plus) - f(&minus)) / (2.0 * EPS);
            worst = worst.max(rel_err(grads[g][i], fd));
        }
    }
    worst
}

#[test]
fn embedder_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cfg = config(Representation::Spherical);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let p = random_params(&cfg, &mut rng);
        let frame = random_frame(&mut rng, 16);
        let dz = random_vec(&mut rng, cfg.feature_dim);
        let g = embed_frame_grad(&p, &frame, &dz).unwrap();
        let mut full = ModelParams::zeros(&cfg).unwrap();
        full.embedder = g;
        let f = |q: &ModelParams| embed_frame(q, &frame).unwrap().dot(&dz);
        worst = worst.max(check_params(&p, &full, 0..2, f));
    }
    assert!(worst < TOL, "worst relative error {worst}");
}

#[test]
fn gru_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = config(Representation::Spherical);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let p = random_params(&cfg, &mut rng);
        let z = random_vec(&mut rng, cfg.feature_dim);
        let h = random_vec(&mut rng, cfg.hidden_dim);
        let dh = random_vec(&mut rng, cfg.hidden_dim);
        let (g, dz, dhp) = gru_step_grad(&p, &z, &h, &dh).unwrap();
        let mut full = ModelParams::zeros(&cfg).unwrap();
        full.gru = g;
        let f = |q: &ModelParams| gru_step(q, &z, &h).unwrap().dot(&dh);
        worst = worst.max(check_params(&p, &full, 2..11, f));

        for (input_grad, is_z) in [(&dz, true), (&dhp, false)] {
            for i in 0..input_grad.len() {
                let (mut zp, mut zm, mut hp, mut hm) = (z.clone(), z.clone(), h.clone(), h.clone());
                if is_z {
                    zp[i] += EPS;
                    zm[i] -= EPS;
                } else {
                    hp[i] += EPS;
                    hm[i] -= EPS;
                }
                let fd =
                    (gru_step(&p, &zp, &hp).unwrap().dot(&dh) - gru_step(&p, &zm, &hm).unwrap().dot(&dh)) / (2.0 * EPS);
                worst = worst.max(rel_err(input_grad[i], fd));
            }
        }
    }
    assert!(worst < TOL, "worst relative error {worst}");
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

#[test]
fn loss_gradient_over_head_outputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = TrainingConfig {
        lambda_tip: 0.7,
        lambda_offset: 3.0,
        lambda_stop: 1.3,
        ..Default::default()
    };
    let mut worst: f64 = 0.0;
    for draw in 0..20 {
        let rep = if draw % 2 == 0 {
            Representation::Spherical
        } else {
            Representation::Cartesian
        };
        let m = 6;
        let k = rep.components();
        let target = random_target(&mut rng, 1 + draw % m, rep);
        let pred = PredictionOutput {
            tip: Vec3::new(rng.random(), rng.random(), rng.random()),
            offsets: (0..k * m).map(|_| rng.random_range(-1.0..1.0)).collect(),
            stop_probs: (0..m).map(|_| rng.random_range(0.05..0.95)).collect(),
            representation: rep,
        };
        let (_, g) = total_loss(&pred, &target, &cfg).unwrap();
        let loss = |p: &PredictionOutput| total_loss(p, &target, &cfg).unwrap().0;
        let mut probe = |get: &dyn Fn(&mut PredictionOutput) -> &mut f64, analytic: f64| {
            let mut plus = pred.clone();
            *get(&mut plus) += EPS;
            let mut minus = pred.clone();
            *get(&mut minus) -= EPS;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * EPS);
            worst = worst.max(rel_err(analytic, fd));
        };
        probe(&|p| &mut p.tip.x, g.tip.x);
        probe(&|p| &mut p.tip.y, g.tip.y);
        probe(&|p| &mut p.tip.z, g.tip.z);
        for i in 0..k * m {
            probe(&move |p| &mut p.offsets[i], g.offsets[i]);
        }
        for j in 0..m {
            probe(&move |p| &mut p.stop_probs[j], g.stop_probs[j]);
        }
    }
    assert!(worst < TOL, "worst relative error {worst}");
}

#[test]
fn total_loss_gradient_over_all_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let tcfg = TrainingConfig::default();
    let mut worst: f64 = 0.0;
    for draw in 0..20 {
        let rep = if draw % 2 == 0 {
            Representation::Spherical
        } else {
            Representation::Cartesian
        };
        let cfg = config(rep);
        let p = random_params(&cfg, &mut rng);
        let frames: Vec<FrameTensor> = (0..3).map(|_| random_frame(&mut rng, 16)).collect();
        let target = random_target(&mut rng, 1 + draw % cfg.max_segments, rep);
        let (_, g) = loss_and_grad(&p, &frames, &target, &tcfg).unwrap();
        let f = |q: &ModelParams| total_loss(&forward(q, &frames).unwrap(), &target, &tcfg).unwrap().0;
        worst = worst.max(check_params(&p, &g, 0..17, f));
    }
    assert!(worst < TOL, "worst relative error {worst}");
}

#[test]
fn forward_vjp_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = config(Representation::Cartesian);
    let p = random_params(&cfg, &mut rng);
    let frames: Vec<FrameTensor> = (0..2).map(|_| random_frame(&mut rng, 16)).collect();
    let dout = OutputGrad {
        tip: Vec3::new(0.3, -0.2, 0.5),
        offsets: (0..cfg.offset_len()).map(|_| rng.random_range(-1.0..1.0)).collect(),
        stop_logits: (0..cfg.max_segments).map(|_| rng.random_range(-1.0..1.0)).collect(),
    };
    let g = forward_grad(&p, &frames, &dout).unwrap();
    let f = |q: &ModelParams| {
        let o = forward(q, &frames).unwrap();
        let logits = o.stop_probs.iter().map(|s| (s / (1.0 - s)).ln());
        o.tip.dot(&dout.tip)
            + o.offsets.iter().zip(&dout.offsets).map(|(a, b)| a * b).sum::<f64>()
            + logits.zip(&dout.stop_logits).map(|(a, b)| a * b).sum::<f64>()
    };
    let worst = check_params(&p, &g, 0..17, f);
    assert!(worst < TOL, "worst relative error {worst}");
}

#[test]
fn bce_matches_direct_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let probs: Vec<f64> = (0..8).map(|_| rng.random_range(0.01..0.99)).collect();
        let labels: Vec<f64> = (0..8).map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 }).collect();
        let mut direct = 0.0;
        for i in 0..8 {
            direct += -labels[i] * probs[i].ln() - (1.0 - labels[i]) * (1.0 - probs[i]).ln();
        }
        assert!((binary_cross_entropy(&probs, &labels) - direct).abs() < 1e-12);
    }
}

#[test]
fn loss_is_nonnegative_and_zero_only_at_match() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = TrainingConfig::default();
    for _ in 0..100 {
        let t = random_target(&mut rng, 3, Representation::Spherical);
        let mut offsets = t.offsets.clone();
        offsets.resize(8, rng.random());
        let exact = PredictionOutput {
            tip: t.tip,
            offsets,
            stop_probs: t.stop_labels(4),
            representation: Representation::Spherical,
        };
        assert_eq!(total_loss(&exact, &t, &cfg).unwrap().0, 0.0);
        let mut off = exact.clone();
        off.offsets[rng.random_range(0..6)] += 1e-3;
        assert!(total_loss(&off, &t, &cfg).unwrap().0 > 0.0);
        let mut stop = exact.clone();
        stop.stop_probs[0] = rng.random_range(0.01..0.99);
        assert!(total_loss(&stop, &t, &cfg).unwrap().0 > 0.0);
    }
}

#[test]
fn single_frame_forward_is_one_gru_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cfg = config(Representation::Spherical);
    let p = random_params(&cfg, &mut rng);
    let frame = random_frame(&mut rng, 16);
    let h = gru_step(&p, &embed_frame(&p, &frame).unwrap(), &DVector::zeros(cfg.hidden_dim)).unwrap();
    let tip = (&p.tip_head.weight * &h + &p.tip_head.bias) * cfg.tip_scale_mm;
    let out = forward(&p, &[frame]).unwrap();
    assert!((out.tip - Vec3::new(tip[0], tip[1], tip[2])).norm() < 1e-12);
}

#[test]
fn frame_order_matters() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cfg = config(Representation::Spherical);
    let p = random_params(&cfg, &mut rng);
    let frames: Vec<FrameTensor> = (0..3).map(|_| random_frame(&mut rng, 16)).collect();
    let mut reversed = frames.clone();
    reversed.reverse();
    let a = forward(&p, &frames).unwrap();
    let b = forward(&p, &reversed).unwrap();
    assert!((a.tip - b.tip).norm() > 1e-6);
}
