//! Loads a `synth` dataset directory into predictor samples.

use std::path::Path;

use wirerecon_core::dataset_io::{load_curves, load_manifest, read_pgm};
use wirerecon_core::predictor::{FrameTensor, TrainingSample};

use crate::CliError;

/// Which videos of the manifest to use; every `val_every`-th video
/// (1-based) is held out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    All,
}

pub struct LoadedSample {
    pub video_id: String,
    pub frame: usize,
    pub sample: TrainingSample,
}

pub struct SampleSpec {
    pub seq_len: usize,
    pub frame_stride: usize,
    pub val_every: usize,
    pub radius_mm: f64,
}

fn in_split(index: usize, split: Split, val_every: usize) -> bool {
    let held_out = val_every > 0 && (index + 1).is_multiple_of(val_every);
    match split {
        Split::Train => !held_out,
        Split::Val => held_out,
        Split::All => true,
    }
}

/// Samples end at the last frame of each video and every `frame_stride`
/// frames before it. Windows reaching before frame 0 repeat frame 0.
pub fn load_samples(dir: &Path, spec: &SampleSpec, split: Split) -> Result<Vec<LoadedSample>, CliError> {
    if spec.seq_len == 0 || spec.frame_stride == 0 {
        return Err(CliError::usage("seq_len and frame_stride must be at least 1"));
    }
    let manifest_path = dir.join("manifest.json");
    if !manifest_path.exists() {
        return Err(CliError::usage(format!(
            "{}: no dataset (manifest.json missing)",
            dir.display()
        )));
    }
    let manifest = load_manifest(&manifest_path)?;
    let mut out = Vec::new();
    for (i, v) in manifest.videos.iter().enumerate() {
        if !in_split(i, split, spec.val_every) || v.frame_count == 0 {
            continue;
        }
        let vdir = dir.join("videos").join(&v.video_id);
        let truth = load_curves(&vdir.join("truth.json"))?;
        let frames: Vec<FrameTensor> = (0..v.frame_count)
            .map(|t| read_pgm(&vdir.join("frames").join(format!("A_{t:04}.pgm"))))
            .collect::<Result<_, _>>()?;
        let mut ends: Vec<usize> = (0..v.frame_count).rev().step_by(spec.frame_stride).collect();
        ends.reverse();
        for t in ends {
            let record = truth
                .curves
                .iter()
                .find(|c| c.frame == t)
                .ok_or_else(|| CliError::usage(format!("{}: no truth curve for frame {t}", v.video_id)))?;
            let window = (0..spec.seq_len)
                .map(|k| frames[(t + k + 1).saturating_sub(spec.seq_len)].clone())
                .collect();
            out.push(LoadedSample {
                video_id: v.video_id.clone(),
                frame: t,
                sample: TrainingSample::new(window, record.to_curve()?, spec.radius_mm)?,
            });
        }
    }
    Ok(out)
}
