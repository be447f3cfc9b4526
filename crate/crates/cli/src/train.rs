use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use wirerecon_core::dataset_io::{load_checkpoint, save_checkpoint};
use wirerecon_core::predictor::{evaluate_metrics, train, ModelConfig, Representation, TrainingConfig, TrainingSample};

use crate::data::{load_samples, LoadedSample, SampleSpec, Split};
use crate::output::{read_json_value, write_csv, write_json};
use crate::synth::merge;
use crate::{CliError, Context};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RepArg {
    Spherical,
    Cartesian,
}

impl From<RepArg> for Representation {
    fn from(r: RepArg) -> Self {
        match r {
            RepArg::Spherical => Representation::Spherical,
            RepArg::Cartesian => Representation::Cartesian,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Val,
    All,
}

/// Contents of `--config`. Missing fields take the desk-scale defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainFileConfig {
    pub model: ModelConfig,
    pub training: TrainingConfig,
    /// Frames per input window.
    pub seq_len: usize,
    /// Distance between the last frames of consecutive samples of a video.
    pub frame_stride: usize,
    /// Every n-th video is held out for validation.
    pub val_every: usize,
}

impl Default for TrainFileConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::desk_scale(),
            training: TrainingConfig::desk_scale(),
            seq_len: 4,
            frame_stride: 4,
            val_every: 5,
        }
    }
}

impl TrainFileConfig {
    fn spec(&self) -> SampleSpec {
        SampleSpec {
            seq_len: self.seq_len,
            frame_stride: self.frame_stride,
            val_every: self.val_every,
            radius_mm: self.training.radius_mm,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory written by `synth`.
    #[arg(long)]
    pub data: PathBuf,
    /// Training configuration (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured offset representation.
    #[arg(long, value_enum)]
    pub representation: Option<RepArg>,
    /// Output directory for `model.json`, `train_log.csv` and `config.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Checkpoint written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset directory written by `synth`.
    #[arg(long)]
    pub data: PathBuf,
    /// Expected representation of the checkpoint; also names the CSV.
    #[arg(long, value_enum)]
    pub representation: Option<RepArg>,
    #[arg(long, default_value_t = 4)]
    pub seq_len: usize,
    #[arg(long, default_value_t = 4)]
    pub frame_stride: usize,
    #[arg(long, default_value_t = 5)]
    pub val_every: usize,
    #[arg(long, value_enum, default_value_t = SplitArg::Val)]
    pub split: SplitArg,
    /// Segment length, mm.
    #[arg(long, default_value_t = 2.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.5)]
    pub stop_threshold: f64,
    /// Output directory for `metrics_<representation>.csv`.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

pub fn load_config(path: Option<&PathBuf>) -> Result<TrainFileConfig, CliError> {
    let base = TrainFileConfig::default();
    let Some(path) = path else { return Ok(base) };
    let mut v = serde_json::to_value(&base).expect("config serializes");
    merge(&mut v, read_json_value(path)?);
    serde_json::from_value(v).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn samples(loaded: Vec<LoadedSample>) -> Vec<TrainingSample> {
    loaded.into_iter().map(|s| s.sample).collect()
}

pub fn run_train(ctx: &Context, args: &TrainArgs) -> Result<(), CliError> {
    let mut cfg = load_config(args.config.as_ref())?;
    if let Some(r) = args.representation {
        cfg.model.representation = r.into();
    }
    cfg.training.seed = ctx.seed;
    let spec = cfg.spec();
    let train_set = samples(load_samples(&args.data, &spec, Split::Train)?);
    let val_set = samples(load_samples(&args.data, &spec, Split::Val)?);
    if train_set.is_empty() || val_set.is_empty() {
        return Err(CliError::usage(format!(
            "{}: need samples in both splits, got {} train and {} validation",
            args.data.display(),
            train_set.len(),
            val_set.len()
        )));
    }
    log::info!(
        "training on {} samples, validating on {}",
        train_set.len(),
        val_set.len()
    );
    let result = train(&train_set, &val_set, &cfg.model, &cfg.training)?;
    let out = ctx.resolve(&args.out);
    save_checkpoint(&out.join("model.json"), &result.params)?;
    // One row per completed epoch; the initial evaluation is only printed.
    write_csv(&out.join("train_log.csv"), &result.log[1..])?;
    write_json(&out.join("config.json"), &cfg)?;
    let first = result.log.first().expect("log has the initial row");
    let best = &result.log[result.best_epoch];
    println!(
        "{} epochs, best epoch {}: train loss {:.4} -> {:.4}, val loss {:.4} -> {:.4}",
        result.log.len() - 1,
        result.best_epoch,
        first.train_loss,
        best.train_loss,
        first.val_loss,
        best.val_loss
    );
    Ok(())
}

#[derive(Serialize)]
struct MetricRow<'a> {
    video_id: &'a str,
    frame: usize,
    max_ed: f64,
    mete: f64,
    mers: f64,
    frechet: f64,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt())
}

pub fn run_eval(ctx: &Context, args: &EvalArgs) -> Result<(), CliError> {
    let params = load_checkpoint(&args.model)?;
    let rep = params.config.representation;
    if let Some(r) = args.representation {
        if Representation::from(r) != rep {
            return Err(CliError::usage(format!(
                "{}: checkpoint is {rep}, --representation asks for {}",
                args.model.display(),
                Representation::from(r)
            )));
        }
    }
    if !(args.radius > 0.0) {
        return Err(CliError::usage("--radius must be positive"));
    }
    let spec = SampleSpec {
        seq_len: args.seq_len,
        frame_stride: args.frame_stride,
        val_every: args.val_every,
        radius_mm: args.radius,
    };
    let split = match args.split {
        SplitArg::Train => Split::Train,
        SplitArg::Val => Split::Val,
        SplitArg::All => Split::All,
    };
    let loaded = load_samples(&args.data, &spec, split)?;
    if loaded.is_empty() {
        return Err(CliError::usage(format!(
            "{}: no samples in the chosen split",
            args.data.display()
        )));
    }
    let set: Vec<TrainingSample> = loaded.iter().map(|s| s.sample.clone()).collect();
    let metrics = evaluate_metrics(&params, &set, args.radius, args.stop_threshold)?;
    let rows: Vec<MetricRow> = loaded
        .iter()
        .zip(&metrics)
        .map(|(s, m)| MetricRow {
            video_id: &s.video_id,
            frame: s.frame,
            max_ed: m.max_ed,
            mete: m.mete,
            mers: m.mers,
            frechet: m.frechet,
        })
        .collect();
    write_csv(&ctx.resolve(&args.out).join(format!("metrics_{rep}.csv")), &rows)?;
    let col = |f: fn(&MetricRow) -> f64| mean_std(&rows.iter().map(f).collect::<Vec<_>>());
    println!("{rep} over {} samples (mean +- std, mm):", rows.len());
    for (name, (m, s)) in [
        ("MaxED", col(|r| r.max_ed)),
        ("METE", col(|r| r.mete)),
        ("MERS", col(|r| r.mers)),
        ("Frechet", col(|r| r.frechet)),
    ] {
        println!("  {name:<8} {m:.3} +- {s:.3}");
    }
    Ok(())
}
