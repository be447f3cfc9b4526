//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each exported function takes and returns JSON strings. The `*_json`
//! functions hold the logic and are callable from native code.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use wasm_bindgen::prelude::*;
use wirerecon_core::curve_repr::{decode, encode, AngularOffset};
use wirerecon_core::geometry::{Curve3D, Vec3};
use wirerecon_core::metrics::{compare_shapes, ShapeMetrics};
use wirerecon_core::reconstruction::{reconstruct_curve_with, reprojection_profile, ReconstructionConfig};
use wirerecon_core::synthetic::{generate_video, RenderConfig, SynthParams, SyntheticError};

#[derive(Debug, Error)]
pub enum WebError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{0}")]
    Failed(String),
}

impl From<WebError> for JsValue {
    fn from(e: WebError) -> Self {
        JsValue::from_str(&e.to_string())
    }
}

type Points = Vec<[f64; 3]>;

fn to_curve(points: &[[f64; 3]]) -> Result<Curve3D, WebError> {
    Curve3D::new(points.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect())
        .map_err(|e| WebError::Input(e.to_string()))
}

fn to_points(c: &Curve3D) -> Points {
    c.points().iter().map(|p| [p.x, p.y, p.z]).collect()
}

fn parse<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T, WebError> {
    serde_json::from_str(text).map_err(|e| WebError::Input(e.to_string()))
}

fn render<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

#[derive(Serialize)]
struct Encoded {
    tip: [f64; 3],
    radius: f64,
    offsets: Vec<AngularOffset>,
    parameter_count: usize,
    decoded: Points,
    max_round_trip_error: f64,
}

/// Encodes a curve (`[[x, y, z], ...]`, mm) as tip plus spherical offsets
/// at step `radius` and decodes it again.
pub fn encode_curve_json(points: &str, radius: f64) -> Result<String, WebError> {
    let curve = to_curve(&parse::<Points>(points)?)?;
    let sc = encode(&curve, radius).map_err(|e| WebError::Failed(e.to_string()))?;
    let back = decode(&sc).map_err(|e| WebError::Failed(e.to_string()))?;
    let full =
        wirerecon_core::curve_repr::resample_full_steps(&curve, radius).map_err(|e| WebError::Failed(e.to_string()))?;
    let err = back
        .points()
        .iter()
        .zip(full.points())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(render(&Encoded {
        tip: [sc.tip.x, sc.tip.y, sc.tip.z],
        radius: sc.radius,
        parameter_count: sc.parameter_count(),
        offsets: sc.offsets,
        decoded: to_points(&back),
        max_round_trip_error: err,
    }))
}

#[derive(Serialize)]
struct Reconstruction {
    truth: Points,
    reconstruction: Points,
    view_a: Vec<[f64; 2]>,
    view_b: Vec<[f64; 2]>,
    image_size: [usize; 2],
    metrics: ShapeMetrics,
    reprojection_a: Vec<f64>,
    reprojection_b: Vec<f64>,
}

/// Generates a random curve on the bench rig, projects it into both views
/// with `noise_px` Gaussian jitter and reconstructs it.
pub fn reconstruct_synthetic_json(seed: u64, noise_px: f64, smoothing_mm: f64) -> Result<String, WebError> {
    if !(noise_px >= 0.0 && smoothing_mm >= 0.0) {
        return Err(WebError::Input("noise and smoothing must be non-negative".into()));
    }
    let params = SynthParams {
        render: RenderConfig {
            noise_px,
            ..RenderConfig::default()
        },
        ..SynthParams::default()
    };
    let sample = (0..100)
        .find_map(|k| match generate_video(&params, 1, seed.wrapping_add(k)) {
            Err(SyntheticError::OutOfBounds { .. }) => None,
            other => Some(other),
        })
        .ok_or_else(|| WebError::Failed("no curve fits in both views".into()))?
        .map_err(|e| WebError::Failed(e.to_string()))?
        .pop()
        .expect("one frame");
    let cfg = ReconstructionConfig {
        smoothing_mm,
        ..Default::default()
    };
    let rec = reconstruct_curve_with(&sample.rig, &sample.poly_a, &sample.poly_b, 1.0, &cfg)
        .map_err(|e| WebError::Failed(e.to_string()))?;
    let metrics = compare_shapes(&rec, &sample.truth, 1.0).map_err(|e| WebError::Failed(e.to_string()))?;
    let prof = reprojection_profile(&sample.rig, &rec, &sample.poly_a, &sample.poly_b)
        .map_err(|e| WebError::Failed(e.to_string()))?;
    let px = |p: &wirerecon_core::geometry::Polyline2D| p.points().iter().map(|q| [q.x, q.y]).collect();
    Ok(render(&Reconstruction {
        truth: to_points(&sample.truth),
        reconstruction: to_points(&rec),
        view_a: px(&sample.poly_a),
        view_b: px(&sample.poly_b),
        image_size: [sample.rig.image_size.0, sample.rig.image_size.1],
        metrics,
        reprojection_a: prof.per_index_error_a,
        reprojection_b: prof.per_index_error_b,
    }))
}

/// Shape metrics between two curves given as `[[x, y, z], ...]`.
pub fn compare_curves_json(pred: &str, truth: &str, delta_u: f64) -> Result<String, WebError> {
    let a = to_curve(&parse::<Points>(pred)?)?;
    let b = to_curve(&parse::<Points>(truth)?)?;
    let m = compare_shapes(&a, &b, delta_u).map_err(|e| WebError::Input(e.to_string()))?;
    Ok(render(&m))
}

#[wasm_bindgen]
pub fn encode_curve(points: &str, radius: f64) -> Result<String, JsValue> {
    Ok(encode_curve_json(points, radius)?)
}

#[wasm_bindgen]
pub fn reconstruct_synthetic(seed: u32, noise_px: f64, smoothing_mm: f64) -> Result<String, JsValue> {
    Ok(reconstruct_synthetic_json(seed as u64, noise_px, smoothing_mm)?)
}

#[wasm_bindgen]
pub fn compare_curves(pred: &str, truth: &str, delta_u: f64) -> Result<String, JsValue> {
    Ok(compare_curves_json(pred, truth, delta_u)?)
}
