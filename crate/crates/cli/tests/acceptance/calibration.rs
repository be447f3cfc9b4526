use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use wirerecon_core::calibration::{
    dlt, fit_lwm, ransac_projection, refine_projection, rms_reprojection_error, undistort_point, Correspondence2D2D,
    Correspondence3D2D, RansacConfig,
};
use wirerecon_core::geometry::{project_with_matrix, Mat34, Vec2, Vec3};

use crate::common::random_camera;
use crate::Outcome;

fn world_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec3> {
    (0..n)
        .map(|_| {
            Vec3::new(
                rng.random_range(-100.0..100.0),
                rng.random_range(-100.0..100.0),
                rng.random_range(-100.0..100.0),
            )
        })
        .collect()
}

fn exact(p: &Mat34, pts: &[Vec3]) -> Vec<Correspondence3D2D> {
    pts.iter()
        .map(|w| Correspondence3D2D {
            world: *w,
            image: project_with_matrix(p, w).unwrap(),
        })
        .collect()
}

/// `|a/|a| - s b/|b||`, minimized over the sign `s`.
fn normalized_error(a: &Mat34, b: &Mat34) -> f64 {
    let (a, b) = (a / a.norm(), b / b.norm());
    (a - b).norm().min((a + b).norm())
}

pub fn projection_estimation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    let mut dlt_worst: f64 = 0.0;
    for _ in 0..20 {
        let cam = random_camera(&mut rng, 1000.0);
        let pts = world_points(&mut rng, 20);
        dlt_worst = dlt_worst.max(normalized_error(&dlt(&exact(&cam.p, &pts)).unwrap(), &cam.p));
    }

    let mut recovered = 0;
    for trial in 0..100 {
        let cam = random_camera(&mut rng, 1000.0);
        let pts = world_points(&mut rng, 50);
        let mut corr = exact(&cam.p, &pts);
        let mut truth = vec![true; corr.len()];
        for (i, c) in corr.iter_mut().enumerate() {
            if i % 10 < 3 {
                let angle = rng.random_range(0.0..std::f64::consts::TAU);
                c.image += Vec2::new(angle.cos(), angle.sin()) * rng.random_range(20.0..200.0);
                truth[i] = false;
            }
        }
        let cfg = RansacConfig {
            iterations: 500,
            inlier_threshold: 2.0,
            seed: trial,
            ..Default::default()
        };
        if ransac_projection(&corr, &cfg)
            .map(|r| r.inliers == truth)
            .unwrap_or(false)
        {
            recovered += 1;
        }
    }

    let cam = random_camera(&mut rng, 1000.0);
    let pts = world_points(&mut rng, 200);
    let noise = Normal::new(0.0, 0.2).unwrap();
    let noisy: Vec<Correspondence3D2D> = exact(&cam.p, &pts)
        .into_iter()
        .map(|mut c| {
            c.image += Vec2::new(noise.sample(&mut rng), noise.sample(&mut rng));
            c
        })
        .collect();
    let floor = rms_reprojection_error(&cam.p, &noisy);
    let perturbed = cam.p.map(|v| v * (1.0 + rng.random_range(-0.01..0.01)));
    let start_rms = rms_reprojection_error(&perturbed, &noisy);
    let refined = refine_projection(&perturbed, &noisy, 100, 1e-12).unwrap();
    let rms = rms_reprojection_error(&refined.projection, &noisy);
    let ratio = rms / floor;

    Outcome::new(
        dlt_worst < 1e-8 && recovered >= 99 && (ratio - 1.0).abs() <= 0.05,
        format!(
            "DLT worst normalized error {dlt_worst:.2e} (< 1e-8); RANSAC exact inlier set {recovered}/100 (>= 99); \
             refinement RMS {start_rms:.2} -> {rms:.4} px vs noise floor {floor:.4} px, ratio {ratio:.4} (within 5%)"
        ),
    )
}

pub fn lwm_undistortion() -> Outcome {
    // Distorted positions follow a quadratic field about the image center.
    let distort = |p: &Vec2| {
        let u = (p.x - 512.0) / 512.0;
        let v = (p.y - 512.0) / 512.0;
        p + Vec2::new(
            6.0 * u * u - 4.0 * u * v + 3.0 * v * v,
            -5.0 * u * u + 2.0 * u * v + 7.0 * v * v,
        )
    };
    let spacing = 1024.0 / 11.0;
    let grid = |i: f64, j: f64| Vec2::new(i * spacing, j * spacing);
    let corr: Vec<Correspondence2D2D> = (0..12)
        .flat_map(|j| (0..12).map(move |i| (i as f64, j as f64)))
        .map(|(i, j)| {
            let t = grid(i, j);
            Correspondence2D2D {
                distorted: distort(&t),
                true_pos: t,
            }
        })
        .collect();
    let model = fit_lwm(&corr, 12).unwrap();
    let at_control = corr
        .iter()
        .map(|c| (undistort_point(&model, &c.distorted).unwrap() - c.true_pos).norm())
        .fold(0.0, f64::max);
    let mut at_mid: f64 = 0.0;
    for j in 0..11 {
        for i in 0..11 {
            let t = grid(i as f64 + 0.5, j as f64 + 0.5);
            at_mid = at_mid.max((undistort_point(&model, &distort(&t)).unwrap() - t).norm());
        }
    }
    Outcome::new(
        at_control < 0.1 && at_mid < 0.5,
        format!("12x12 grid, max residual {at_control:.2e} px at control points (< 0.1), {at_mid:.2e} px at midpoints (< 0.5)"),
    )
}
