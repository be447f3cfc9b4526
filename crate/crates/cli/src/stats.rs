use std::path::PathBuf;

use clap::Args;
use wirerecon_core::dataset_io::{load_manifest, manifest_stats, reference_manifest};

use crate::output::write_text;
use crate::{CliError, Context};

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Manifest to summarize.
    #[arg(long, required_unless_present = "reference", conflicts_with = "reference")]
    pub manifest: Option<PathBuf>,
    /// Summarize the built-in reference manifest.
    #[arg(long)]
    pub reference: bool,
    /// CSV output path.
    #[arg(long, default_value = "stats.csv")]
    pub out: PathBuf,
}

pub fn run(ctx: &Context, args: &StatsArgs) -> Result<(), CliError> {
    let manifest = match &args.manifest {
        Some(p) => load_manifest(p)?,
        None => reference_manifest(),
    };
    let table = manifest_stats(&manifest)?;
    write_text(&ctx.resolve(&args.out), &table.to_csv())?;
    println!("{table}");
    Ok(())
}
