use super::model::Representation;
use super::{forward, ModelParams, PredictionOutput, PredictorError, TrainingSample};
use crate::curve_repr::{decode, AngularOffset, SphericalCurve};
use crate::geometry::Curve3D;
use crate::metrics::{compare_shapes, ShapeMetrics};

/// Number of segments: one past the first index whose stop probability
/// reaches `stop_threshold`, or past the argmax when none does.
fn predicted_length(stop_probs: &[f64], stop_threshold: f64) -> usize {
    match stop_probs.iter().position(|&p| p >= stop_threshold) {
        Some(j) => j + 1,
        None => {
            let mut best = 0;
            for (j, &p) in stop_probs.iter().enumerate() {
                if p > stop_probs[best] {
                    best = j;
                }
            }
            best + 1
        }
    }
}

/// Turns head outputs into a tip-first curve with segment length `r`.
pub fn decode_prediction(out: &PredictionOutput, r: f64, stop_threshold: f64) -> Result<Curve3D, PredictorError> {
    if !(stop_threshold > 0.0 && stop_threshold < 1.0) {
        return Err(PredictorError::InvalidConfig(format!(
            "stop threshold must lie in (0, 1), got {stop_threshold}"
        )));
    }
    if out.stop_probs.is_empty() {
        return Err(PredictorError::DimensionMismatch("no stop outputs".into()));
    }
    let k = out.representation.components();
    let len = predicted_length(&out.stop_probs, stop_threshold);
    if out.offsets.len() < k * len {
        return Err(PredictorError::DimensionMismatch(format!(
            "{} offset values for {len} segments",
            out.offsets.len()
        )));
    }
    match out.representation {
        Representation::Spherical => {
            let sc = SphericalCurve {
                tip: out.tip,
                radius: r,
                offsets: out.offsets[..2 * len]
                    .chunks(2)
                    .map(|c| AngularOffset::from([c[0], c[1]]))
                    .collect(),
            };
            Ok(decode(&sc)?)
        }
        Representation::Cartesian => {
            let mut pts = vec![out.tip];
            for c in out.offsets[..3 * len].chunks(3) {
                let p = out.tip + crate::geometry::Vec3::new(c[0], c[1], c[2]);
                if pts.last() != Some(&p) {
                    pts.push(p);
                }
            }
            Curve3D::new(pts).map_err(|e| PredictorError::CurveRepr(crate::curve_repr::CurveReprError::from(e)))
        }
    }
}

/// Shape metrics of the decoded prediction for every sample against its
/// ground-truth curve, both resampled at `r`.
pub fn evaluate_metrics(
    params: &ModelParams,
    samples: &[TrainingSample],
    r: f64,
    stop_threshold: f64,
) -> Result<Vec<ShapeMetrics>, PredictorError> {
    samples
        .iter()
        .map(|s| {
            let out = forward(params, &s.frames)?;
            let pred = decode_prediction(&out, r, stop_threshold)?;
            compare_shapes(&pred, &s.truth, r).map_err(|e| PredictorError::DimensionMismatch(e.to_string()))
        })
        .collect()
}
