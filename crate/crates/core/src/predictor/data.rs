use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FrameTensor, PredictorError};
use crate::curve_repr::{encode, SphericalCurve};
use crate::geometry::Curve3D;
use crate::synthetic::{generate_video, SynthParams};

/// One training example: a view-A frame window and the curve shown in its
/// last frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub frames: Vec<FrameTensor>,
    pub target: SphericalCurve,
    pub truth: Curve3D,
}

impl TrainingSample {
    pub fn new(frames: Vec<FrameTensor>, truth: Curve3D, radius_mm: f64) -> Result<Self, PredictorError> {
        Ok(Self {
            target: encode(&truth, radius_mm)?,
            frames,
            truth,
        })
    }
}

/// Renders `count` sequences of `params.render.seq_len` frames. Each yields
/// one sample whose target is its final curve encoded at `radius_mm`.
pub fn build_dataset(
    params: &SynthParams,
    count: usize,
    seed: u64,
    radius_mm: f64,
) -> Result<Vec<TrainingSample>, PredictorError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let last = generate_video(params, params.render.seq_len, rng.random())
                .map_err(|e| PredictorError::InvalidConfig(e.to_string()))?
                .pop()
                .expect("video is nonempty");
            TrainingSample::new(last.frames_a, last.truth, radius_mm)
        })
        .collect()
}
