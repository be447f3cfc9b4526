use rand::Rng;
use rand_chacha::ChaCha8Rng;
use wirerecon_core::geometry::{CameraParameters, Mat3, Vec3};
use wirerecon_core::synthetic::{generate_video, SynthParams, SyntheticError, SyntheticSample};

/// First in-view single-frame sample generated from `rng`.
pub fn in_view_sample(params: &SynthParams, rng: &mut ChaCha8Rng) -> SyntheticSample {
    for _ in 0..100 {
        match generate_video(params, 1, rng.random()) {
            Ok(mut v) => return v.pop().unwrap(),
            Err(SyntheticError::OutOfBounds { .. }) => continue,
            Err(e) => panic!("{e}"),
        }
    }
    panic!("no in-view curve in 100 attempts");
}

/// Camera `distance` mm from the origin in a random direction, looking at
/// it, with a slightly skewed, non-square intrinsic matrix.
pub fn random_camera(rng: &mut ChaCha8Rng, distance: f64) -> CameraParameters {
    let dir = loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if v.norm() > 0.2 && v.norm() <= 1.0 {
            break v.normalize();
        }
    };
    let center = dir * distance;
    let up = if dir.y.abs() < 0.9 { Vec3::y() } else { Vec3::x() };
    let z = -dir;
    let x = up.cross(&z).normalize();
    let y = z.cross(&x);
    let r = Mat3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
    let f = rng.random_range(2000.0..5000.0);
    let k = Mat3::new(
        f,
        rng.random_range(-2.0..2.0),
        512.0 + rng.random_range(-20.0..20.0),
        0.0,
        f * rng.random_range(0.98..1.02),
        512.0 + rng.random_range(-20.0..20.0),
        0.0,
        0.0,
        1.0,
    );
    CameraParameters::new(k, r, -(r * center)).unwrap()
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
