//! `wirerecon` command-line pipeline.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 data or geometry
//! failure, 4 numerical failure.

mod calibrate;
mod data;
mod error;
mod output;
mod reconstruct;
mod stats;
mod svg;
mod synth;
mod train;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "wirerecon",
    version,
    about = "Bi-planar guidewire reconstruction and shape prediction"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct GlobalArgs {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Relative output paths are resolved against this directory.
    #[arg(long, global = true, default_value = ".")]
    pub output_dir: PathBuf,
    /// error, warn, info, debug or trace; WIRERECON_LOG takes precedence.
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a camera from 3D-2D correspondences (RANSAC + refinement).
    Calibrate(calibrate::CalibrateArgs),
    /// Triangulate every frame annotated in both views.
    Reconstruct(reconstruct::ReconstructArgs),
    /// Train the shape predictor on a synthetic dataset directory.
    Train(train::TrainArgs),
    /// Score a trained predictor against ground truth curves.
    Eval(train::EvalArgs),
    /// Generate a synthetic dataset.
    Synth(synth::SynthArgs),
    /// Print the composition table of a manifest.
    Stats(stats::StatsArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Calibrate(_) => "calibrate",
            Command::Reconstruct(_) => "reconstruct",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Synth(_) => "synth",
            Command::Stats(_) => "stats",
        }
    }
}

/// Shared state handed to each subcommand.
pub struct Context {
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Context {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.output_dir.join(p)
        }
    }
}

fn init_logging(level: &str) {
    let filter = std::env::var("WIRERECON_LOG").unwrap_or_else(|_| level.to_string());
    let _ = env_logger::Builder::new()
        .parse_filters(&filter)
        .format_timestamp(None)
        .try_init();
}

#[derive(Serialize)]
struct RunRecord<'a> {
    command: &'a str,
    args: Vec<String>,
    seed: u64,
    version: &'a str,
}

fn execute(cli: &Cli, argv: &[String]) -> Result<(), CliError> {
    let ctx = Context {
        seed: cli.global.seed,
        output_dir: cli.global.output_dir.clone(),
    };
    std::fs::create_dir_all(&ctx.output_dir)
        .map_err(|e| CliError::usage(format!("{}: {e}", ctx.output_dir.display())))?;
    let record = RunRecord {
        command: cli.command.name(),
        args: argv.to_vec(),
        seed: ctx.seed,
        version: env!("CARGO_PKG_VERSION"),
    };
    output::write_json(&ctx.output_dir.join("run.json"), &record)?;
    match &cli.command {
        Command::Calibrate(a) => calibrate::run(&ctx, a),
        Command::Reconstruct(a) => reconstruct::run(&ctx, a),
        Command::Train(a) => train::run_train(&ctx, a),
        Command::Eval(a) => train::run_eval(&ctx, a),
        Command::Synth(a) => synth::run(&ctx, a),
        Command::Stats(a) => stats::run(&ctx, a),
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_logging(&cli.global.log_level);
    let printable: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(&cli, &printable) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}
