use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wirerecon_core::curve_repr::{decode, encode};
use wirerecon_core::geometry::{
    arclength_resample, cartesian_to_spherical, spherical_to_cartesian, wrap_angle, SphericalPoint,
};
use wirerecon_core::synthetic::{gen_curve, CurveGenParams};

use crate::Outcome;

pub fn spherical_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let points: Vec<SphericalPoint> = (0..100_000)
        .map(|_| {
            SphericalPoint::new(
                10f64.powf(rng.random_range(-2.0..3.0)),
                rng.random_range(1e-3..PI - 1e-3),
                rng.random_range(-PI..PI),
            )
        })
        .collect();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for s in &points {
        let back = cartesian_to_spherical(&spherical_to_cartesian(*s).unwrap()).unwrap();
        let e = ((back.r - s.r) / s.r)
            .abs()
            .max((back.theta - s.theta).abs() / s.theta)
            .max(wrap_angle(back.phi - s.phi).abs() / s.phi.abs().max(1e-3));
        worst = worst.max(e);
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        worst < 1e-12 && secs < 1.0,
        format!("max relative error {worst:.2e} (< 1e-12), {secs:.3} s (< 1 s)"),
    )
}

pub fn curve_round_trip() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count_ok = true;
    for seed in 0..1000 {
        let curve = gen_curve(&CurveGenParams {
            seed,
            ..Default::default()
        })
        .unwrap();
        let sc = encode(&curve, 2.0).unwrap();
        let decoded = decode(&sc).unwrap();
        let reference = arclength_resample(&curve, 2.0).unwrap();
        // A trailing partial step is not representable.
        let n = decoded.len();
        count_ok &= n == reference.len() || n + 1 == reference.len();
        for (a, b) in decoded.points().iter().zip(reference.points()) {
            worst = worst.max((a - b).norm());
        }
    }
    Outcome::new(
        worst < 1e-9 && count_ok,
        format!("1000 curves, max point error {worst:.2e} mm (< 1e-9), sample counts agree: {count_ok}"),
    )
}
