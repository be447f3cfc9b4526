//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p wirerecon --test acceptance`. Numeric arguments
//! select criteria, e.g. `-- 3 9`.

mod calibration;
mod cli;
mod common;
mod curves;
mod metrics;
mod predictor;
mod reconstruction;

use std::time::Instant;

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

type Criterion = (u32, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 12] = [
    (1, "spherical round trip", curves::spherical_round_trip),
    (2, "curve representation round trip", curves::curve_round_trip),
    (3, "noise-free reconstruction", reconstruction::noise_free),
    (4, "noisy reconstruction", reconstruction::noisy),
    (5, "calibration", calibration::projection_estimation),
    (6, "LWM undistortion", calibration::lwm_undistortion),
    (7, "gradient suite", predictor::gradients),
    (8, "desk-scale training", predictor::desk_training),
    (9, "representation comparison", cli::representation_comparison),
    (10, "metrics vs brute force", metrics::brute_force),
    (11, "manifest stats", cli::composition),
    (12, "CLI determinism", cli::determinism),
];

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, run) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        });
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id:>2} {verdict} {name} ({:.1} s): {}",
            start.elapsed().as_secs_f64(),
            outcome.detail
        );
        if !outcome.pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
