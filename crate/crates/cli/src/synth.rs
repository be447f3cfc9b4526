use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use wirerecon_core::dataset_io::{
    save_annotation_file, save_curves, save_manifest, save_rig, write_pgm, AnnotationFile, CurveFile, CurveRecord,
    GuidewireType, Manifest, RigFile, VideoEntry,
};
use wirerecon_core::geometry::ViewId;
use wirerecon_core::synthetic::{generate_video, SynthParams, SyntheticError, SyntheticSample};

use crate::output::{read_json_value, write_json};
use crate::{CliError, Context};

/// Attempts per video before an out-of-view curve is reported.
const MAX_ATTEMPTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Short anchored curves for predictor training.
    Desk,
    /// Reconstruction bench: free placement, default rig.
    Bench,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Generator parameters (JSON). Fields present override the preset.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Preset::Desk)]
    pub preset: Preset,
    #[arg(long, default_value_t = 10)]
    pub videos: usize,
    #[arg(long, default_value_t = 20)]
    pub frames: usize,
    /// Dataset directory.
    #[arg(long)]
    pub out: PathBuf,
}

/// Recursively overlays `patch` on `base`.
pub fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, p) => *slot = p,
    }
}

pub fn load_params(preset: Preset, path: Option<&PathBuf>) -> Result<SynthParams, CliError> {
    let base = match preset {
        Preset::Desk => SynthParams::desk_scale(),
        Preset::Bench => SynthParams::default(),
    };
    let Some(path) = path else { return Ok(base) };
    let mut v = serde_json::to_value(&base).expect("params serialize");
    merge(&mut v, read_json_value(path)?);
    let params: SynthParams =
        serde_json::from_value(v).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    params.validate()?;
    Ok(params)
}

fn video(params: &SynthParams, frames: usize, rng: &mut ChaCha8Rng) -> Result<Vec<SyntheticSample>, CliError> {
    let mut last = None;
    for _ in 0..MAX_ATTEMPTS {
        match generate_video(params, frames, rng.random()) {
            Ok(v) => return Ok(v),
            Err(e @ SyntheticError::OutOfBounds { .. }) => last = Some(e),
            Err(e) => return Err(e.into()),
        }
    }
    Err(CliError::data(format!(
        "no in-view curve after {MAX_ATTEMPTS} attempts: {}",
        last.expect("at least one attempt")
    )))
}

pub fn run(ctx: &Context, args: &SynthArgs) -> Result<(), CliError> {
    if args.videos == 0 || args.frames == 0 {
        return Err(CliError::usage("--videos and --frames must be at least 1"));
    }
    let params = load_params(args.preset, args.params.as_ref())?;
    params.validate()?;
    let out = ctx.resolve(&args.out);
    let rig = params.rig.build()?;
    save_rig(&out.join("rig.json"), &RigFile::from_rig(&rig))?;
    write_json(&out.join("synth_params.json"), &params)?;

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut entries = Vec::with_capacity(args.videos);
    for v in 0..args.videos {
        let id = format!("video_{v:04}");
        let ty = if rng.random_bool(0.5) {
            GuidewireType::Angled
        } else {
            GuidewireType::Straight
        };
        let fluid = rng.random_bool(0.5);
        let samples = video(&params, args.frames, &mut rng)?;
        let dir = out.join("videos").join(&id);
        let mut ann = AnnotationFile::new(&id, ty, fluid);
        ann.image_size = [rig.image_size.0, rig.image_size.1];
        let mut truth = Vec::with_capacity(samples.len());
        for (t, s) in samples.iter().enumerate() {
            ann.push(t, ViewId::A, &s.poly_a);
            ann.push(t, ViewId::B, &s.poly_b);
            truth.push(CurveRecord::from_curve(t, &s.truth));
            let frame = s.frames_a.last().expect("window is nonempty");
            write_pgm(&dir.join("frames").join(format!("A_{t:04}.pgm")), frame)?;
        }
        save_annotation_file(&dir.join("annotations.json"), &ann)?;
        save_curves(&dir.join("truth.json"), &CurveFile::new(&id, truth))?;
        entries.push(VideoEntry {
            video_id: id.clone(),
            guidewire_type: ty,
            fluid,
            frame_count: args.frames,
            annotation_path: format!("videos/{id}/annotations.json"),
            camera_bundle_path: "rig.json".into(),
        });
    }
    save_manifest(&out.join("manifest.json"), &Manifest::new(entries))?;
    println!(
        "wrote {} videos x {} frames to {}",
        args.videos,
        args.frames,
        out.display()
    );
    Ok(())
}
