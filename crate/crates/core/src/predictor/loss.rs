use super::model::Representation;
use super::network::OutputGrad;
use super::{PredictionOutput, PredictorError, TrainingConfig};
use crate::curve_repr::{decode, SphericalCurve};
use crate::geometry::Vec3;

/// Regression target for one sample: tip, per-segment offsets in the
/// model's representation, and the number of valid segments.
#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub tip: Vec3,
    /// `components * length` values.
    pub offsets: Vec<f64>,
    pub length: usize,
    pub representation: Representation,
}

impl Target {
    pub fn from_spherical(sc: &SphericalCurve, representation: Representation) -> Result<Self, PredictorError> {
        let offsets = match representation {
            Representation::Spherical => sc.offsets.iter().flat_map(|o| [o.delta_theta, o.delta_phi]).collect(),
            Representation::Cartesian => {
                let pts = decode(sc)?.into_points();
                pts[1..]
                    .iter()
                    .flat_map(|p| {
                        let d = p - sc.tip;
                        [d.x, d.y, d.z]
                    })
                    .collect()
            }
        };
        Ok(Self {
            tip: sc.tip,
            offsets,
            length: sc.offsets.len(),
            representation,
        })
    }

    /// One-hot at the terminal segment index `length - 1`.
    pub fn stop_labels(&self, m: usize) -> Vec<f64> {
        (0..m).map(|j| if j + 1 == self.length { 1.0 } else { 0.0 }).collect()
    }
}

/// Per-term breakdown of the loss for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossTerms {
    pub tip: f64,
    pub offset: f64,
    pub stop: f64,
}

impl LossTerms {
    pub fn total(&self) -> f64 {
        self.tip + self.offset + self.stop
    }
}

/// Gradients of the loss with respect to each prediction output.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub tip: Vec3,
    pub offsets: Vec<f64>,
    pub stop_probs: Vec<f64>,
    /// Same as `stop_probs` pushed through the logistic, computed stably.
    pub stop_logits: Vec<f64>,
}

impl LossGrad {
    pub fn to_output_grad(&self) -> OutputGrad {
        OutputGrad {
            tip: self.tip,
            offsets: self.offsets.clone(),
            stop_logits: self.stop_logits.clone(),
        }
    }
}

const PROB_FLOOR: f64 = 1e-12;

/// Elementwise binary cross-entropy, summed.
pub fn binary_cross_entropy(probs: &[f64], labels: &[f64]) -> f64 {
    probs
        .iter()
        .zip(labels)
        .map(|(&p, &s)| {
            let pos = if s != 0.0 { s * p.max(PROB_FLOOR).ln() } else { 0.0 };
            let neg = if s != 1.0 {
                (1.0 - s) * (1.0 - p).max(PROB_FLOOR).ln()
            } else {
                0.0
            };
            -(pos + neg)
        })
        .sum()
}

/// Single-sample loss
/// `l_tip |p^ - p|^2 + l_off * mean_valid(sq. offset error) + l_stop * mean_M(BCE)`.
/// Cartesian offset errors are divided by `cfg.cartesian_unit_mm` first.
/// Offsets beyond the target length are masked out; the stop labels are
/// one-hot at the terminal segment.
pub fn total_loss(
    pred: &PredictionOutput,
    target: &Target,
    cfg: &TrainingConfig,
) -> Result<(f64, LossGrad), PredictorError> {
    let (terms, grad) = loss_terms(pred, target, cfg)?;
    Ok((terms.total(), grad))
}

pub fn loss_terms(
    pred: &PredictionOutput,
    target: &Target,
    cfg: &TrainingConfig,
) -> Result<(LossTerms, LossGrad), PredictorError> {
    let m = pred.stop_probs.len();
    let k = pred.representation.components();
    if target.length > m {
        return Err(PredictorError::LengthExceedsM {
            length: target.length,
            max: m,
        });
    }
    if pred.representation != target.representation
        || pred.offsets.len() != k * m
        || target.offsets.len() != k * target.length
    {
        return Err(PredictorError::DimensionMismatch(
            "prediction and target layouts differ".into(),
        ));
    }
    if target.length == 0 {
        return Err(PredictorError::DimensionMismatch("empty target".into()));
    }

    let dtip = pred.tip - target.tip;
    let tip = cfg.lambda_tip * dtip.norm_squared();
    let g_tip = dtip * (2.0 * cfg.lambda_tip);

    let n_valid = target.length as f64;
    // Cartesian errors are measured in units of `cartesian_unit_mm` so one
    // offset weight suits both representations.
    let unit = match pred.representation {
        Representation::Spherical => 1.0,
        Representation::Cartesian => cfg.cartesian_unit_mm,
    };
    let mut offset = 0.0;
    let mut g_off = vec![0.0; pred.offsets.len()];
    for i in 0..k * target.length {
        let d = (pred.offsets[i] - target.offsets[i]) / unit;
        offset += d * d;
        g_off[i] = 2.0 * cfg.lambda_offset * d / (n_valid * unit);
    }
    offset *= cfg.lambda_offset / n_valid;

    let labels = target.stop_labels(m);
    let stop = cfg.lambda_stop * binary_cross_entropy(&pred.stop_probs, &labels) / m as f64;
    let scale = cfg.lambda_stop / m as f64;
    let g_prob = pred
        .stop_probs
        .iter()
        .zip(&labels)
        .map(|(&p, &s)| {
            let p = p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
            scale * (-s / p + (1.0 - s) / (1.0 - p))
        })
        .collect();
    let g_logit = pred
        .stop_probs
        .iter()
        .zip(&labels)
        .map(|(&p, &s)| scale * (p - s))
        .collect();

    Ok((
        LossTerms { tip, offset, stop },
        LossGrad {
            tip: g_tip,
            offsets: g_off,
            stop_probs: g_prob,
            stop_logits: g_logit,
        },
    ))
}
