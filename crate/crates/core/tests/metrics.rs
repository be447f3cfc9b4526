use proptest::prelude::*;
use wirerecon_core::geometry::{arclength_resample, Curve3D, Mat3, Vec3};
use wirerecon_core::metrics::{compare_shapes, frechet_distance, MetricsError};
use wirerecon_core::synthetic::{gen_curve, CurveGenParams};

fn curve(seed: u64) -> Curve3D {
    gen_curve(&CurveGenParams {
        seed,
        length_range: (15.0, 50.0),
        box_size: 60.0,
        ..Default::default()
    })
    .unwrap()
}

/// Exhaustive minimum over monotone couplings, by memoized recursion.
fn frechet_brute(a: &[Vec3], b: &[Vec3]) -> f64 {
    fn go(i: usize, j: usize, a: &[Vec3], b: &[Vec3], memo: &mut [Vec<f64>]) -> f64 {
        if !memo[i][j].is_nan() {
            return memo[i][j];
        }
        let d = (a[i] - b[j]).norm();
        let mut best = f64::INFINITY;
        if i > 0 {
            best = best.min(go(i - 1, j, a, b, memo));
        }
        if j > 0 {
            best = best.min(go(i, j - 1, a, b, memo));
        }
        if i > 0 && j > 0 {
            best = best.min(go(i - 1, j - 1, a, b, memo));
        }
        let v = if i == 0 && j == 0 { d } else { best.max(d) };
        memo[i][j] = v;
        v
    }
    let mut memo = vec![vec![f64::NAN; b.len()]; a.len()];
    for i in 0..a.len() {
        for j in 0..b.len() {
            go(i, j, a, b, &mut memo);
        }
    }
    memo[a.len() - 1][b.len() - 1]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn matches_brute_force(sa in any::<u64>(), sb in any::<u64>(), step in 0.5f64..3.0) {
        let (a, b) = (curve(sa), curve(sb));
        let m = compare_shapes(&a, &b, step).unwrap();
        let ra = arclength_resample(&a, step).unwrap();
        let rb = arclength_resample(&b, step).unwrap();
        let n = ra.len().min(rb.len());
        let d: Vec<f64> = (0..n).map(|i| (ra.points()[i] - rb.points()[i]).norm()).collect();
        prop_assert!((m.max_ed - d.iter().cloned().fold(0.0, f64::max)).abs() < 1e-12);
        prop_assert!((m.mete - d[0]).abs() < 1e-12);
        prop_assert!((m.mers - d.iter().sum::<f64>() / n as f64).abs() < 1e-12);
        prop_assert!((m.frechet - frechet_brute(ra.points(), rb.points())).abs() < 1e-12);
    }

    #[test]
    fn ordering_and_nonnegativity(sa in any::<u64>(), sb in any::<u64>()) {
        let m = compare_shapes(&curve(sa), &curve(sb), 1.0).unwrap();
        prop_assert!(m.mete >= 0.0 && m.mers >= 0.0 && m.frechet >= 0.0);
        prop_assert!(m.max_ed >= m.mers && m.max_ed >= m.mete);
    }

    #[test]
    fn identical_curves_score_zero(s in any::<u64>(), step in 0.5f64..3.0) {
        let c = curve(s);
        let m = compare_shapes(&c, &c, step).unwrap();
        prop_assert_eq!([m.max_ed, m.mete, m.mers, m.frechet], [0.0; 4]);
    }

    #[test]
    fn translation_gives_its_norm(s in any::<u64>(), x in -5.0f64..5.0, y in -5.0f64..5.0, z in -5.0f64..5.0) {
        let c = curve(s);
        let t = Vec3::new(x, y, z);
        let m = compare_shapes(&c.transformed(&Mat3::identity(), &t), &c, 1.0).unwrap();
        for v in [m.max_ed, m.mete, m.mers, m.frechet] {
            prop_assert!((v - t.norm()).abs() < 1e-9);
        }
    }

    #[test]
    fn frechet_is_symmetric(sa in any::<u64>(), sb in any::<u64>()) {
        let a = arclength_resample(&curve(sa), 1.0).unwrap();
        let b = arclength_resample(&curve(sb), 1.0).unwrap();
        let ab = frechet_distance(a.points(), b.points()).unwrap();
        let ba = frechet_distance(b.points(), a.points()).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
    }
}

#[test]
fn invalid_inputs() {
    assert_eq!(
        frechet_distance(&[], &[Vec3::zeros()]),
        Err(MetricsError::EmptyPolyline)
    );
    assert!(compare_shapes(&curve(1), &curve(2), 0.0).is_err());
}
