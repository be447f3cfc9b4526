use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wirerecon_core::geometry::{arclength_resample, Curve3D, Mat3, Vec3};
use wirerecon_core::metrics::compare_shapes;
use wirerecon_core::synthetic::{gen_curve, CurveGenParams};

use crate::Outcome;

/// Fréchet distance straight from the recursive definition, memoized.
fn frechet_recursive(a: &[Vec3], b: &[Vec3]) -> f64 {
    fn c(i: usize, j: usize, a: &[Vec3], b: &[Vec3], memo: &mut Vec<Vec<Option<f64>>>) -> f64 {
        if let Some(v) = memo[i][j] {
            return v;
        }
        let d = (a[i] - b[j]).norm();
        let v = if i == 0 && j == 0 {
            d
        } else if i == 0 {
            c(0, j - 1, a, b, memo).max(d)
        } else if j == 0 {
            c(i - 1, 0, a, b, memo).max(d)
        } else {
            let m = c(i - 1, j, a, b, memo)
                .min(c(i - 1, j - 1, a, b, memo))
                .min(c(i, j - 1, a, b, memo));
            m.max(d)
        };
        memo[i][j] = Some(v);
        v
    }
    let mut memo = vec![vec![None; b.len()]; a.len()];
    // Fill in increasing order so the recursion depth stays small.
    for i in 0..a.len() {
        for j in 0..b.len() {
            c(i, j, a, b, &mut memo);
        }
    }
    memo[a.len() - 1][b.len() - 1].unwrap()
}

fn brute(pred: &Curve3D, truth: &Curve3D, step: f64) -> [f64; 4] {
    let a = arclength_resample(pred, step).unwrap();
    let b = arclength_resample(truth, step).unwrap();
    let n = a.len().min(b.len());
    let mut max: f64 = 0.0;
    let mut sum = 0.0;
    for i in 0..n {
        let d = ((a.points()[i] - b.points()[i]).map(|x| x * x)).sum().sqrt();
        max = max.max(d);
        sum += d;
    }
    let tip = (a.points()[0] - b.points()[0]).norm();
    [max, tip, sum / n as f64, frechet_recursive(a.points(), b.points())]
}

pub fn brute_force() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let gen = |seed: u64, len: (f64, f64)| {
        gen_curve(&CurveGenParams {
            seed,
            length_range: len,
            box_size: 60.0,
            ..Default::default()
        })
        .unwrap()
    };
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let a = gen(rng.random(), (20.0, 60.0));
        let b = gen(rng.random(), (20.0, 60.0));
        let step = rng.random_range(0.5..3.0);
        let m = compare_shapes(&a, &b, step).unwrap();
        let o = brute(&a, &b, step);
        for (x, y) in [m.max_ed, m.mete, m.mers, m.frechet].iter().zip(o) {
            worst = worst.max((x - y).abs());
        }
    }

    let mut translation_worst: f64 = 0.0;
    for _ in 0..20 {
        let c = gen(rng.random(), (20.0, 60.0));
        let offset = Vec3::new(
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
        );
        let moved = c.transformed(&Mat3::identity(), &offset);
        let m = compare_shapes(&moved, &c, 1.0).unwrap();
        for v in [m.max_ed, m.mete, m.mers, m.frechet] {
            translation_worst = translation_worst.max((v - offset.norm()).abs());
        }
    }
    Outcome::new(
        worst < 1e-9 && translation_worst < 1e-9,
        format!(
            "100 pairs, max deviation from brute force {worst:.2e} (< 1e-9); translation: max |metric - offset| {translation_worst:.2e}"
        ),
    )
}
