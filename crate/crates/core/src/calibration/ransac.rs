use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dlt::{dlt, reprojection_errors};
use super::{CalibrationError, Correspondence3D2D};
use crate::geometry::Mat34;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RansacConfig {
    pub iterations: usize,
    /// Reprojection error below which a correspondence is an inlier, pixels.
    pub inlier_threshold: f64,
    pub min_sample: usize,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            inlier_threshold: 2.0,
            min_sample: 6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacResult {
    pub projection: Mat34,
    pub inliers: Vec<bool>,
}

impl RansacResult {
    pub fn inlier_count(&self) -> usize {
        self.inliers.iter().filter(|&&b| b).count()
    }
}

fn inlier_mask(p: &Mat34, correspondences: &[Correspondence3D2D], threshold: f64) -> Vec<bool> {
    reprojection_errors(p, correspondences)
        .into_iter()
        .map(|e| e < threshold)
        .collect()
}

fn select(correspondences: &[Correspondence3D2D], mask: &[bool]) -> Vec<Correspondence3D2D> {
    correspondences
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(c, _)| *c)
        .collect()
}

/// Robust projection estimate: minimal-sample DLT hypotheses scored by
/// inlier count, then a DLT refit on the consensus set.
///
/// Ties keep the earliest hypothesis. The refit is repeated until the inlier
/// mask stops changing (at most a few rounds), so the returned mask is the
/// one induced by the returned matrix.
pub fn ransac_projection(
    correspondences: &[Correspondence3D2D],
    cfg: &RansacConfig,
) -> Result<RansacResult, CalibrationError> {
    let n = correspondences.len();
    if cfg.iterations == 0 || !(cfg.inlier_threshold > 0.0) {
        return Err(CalibrationError::InvalidInput(
            "RANSAC needs iterations >= 1 and a positive threshold".into(),
        ));
    }
    let min_sample = cfg.min_sample.max(6);
    if n < min_sample {
        return Err(CalibrationError::InsufficientPoints {
            needed: min_sample,
            got: n,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(usize, Vec<bool>)> = None;
    let mut sample = Vec::with_capacity(min_sample);
    for _ in 0..cfg.iterations {
        sample.clear();
        sample.extend(
            rand::seq::index::sample(&mut rng, n, min_sample)
                .into_iter()
                .map(|i| correspondences[i]),
        );
        let Ok(p) = dlt(&sample) else { continue };
        let mask = inlier_mask(&p, correspondences, cfg.inlier_threshold);
        let count = mask.iter().filter(|&&b| b).count();
        if best.as_ref().is_none_or(|(c, _)| count > *c) {
            best = Some((count, mask));
        }
    }

    let (count, mut mask) = best.unwrap_or((0, vec![false; n]));
    if count < 6 {
        return Err(CalibrationError::NoConsensus(count));
    }
    let mut projection = dlt(&select(correspondences, &mask))?;
    for _ in 0..5 {
        let next = inlier_mask(&projection, correspondences, cfg.inlier_threshold);
        if next == mask {
            break;
        }
        let c = next.iter().filter(|&&b| b).count();
        if c < 6 {
            return Err(CalibrationError::NoConsensus(c));
        }
        mask = next;
        projection = dlt(&select(correspondences, &mask))?;
    }
    Ok(RansacResult {
        projection,
        inliers: mask,
    })
}
