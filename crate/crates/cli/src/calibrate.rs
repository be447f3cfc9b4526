use std::path::PathBuf;

use clap::Args;
use wirerecon_core::calibration::{
    ransac_projection, refine_projection, rms_reprojection_error, CameraBundle, RansacConfig,
};
use wirerecon_core::dataset_io::{load_correspondences, save_camera_bundle};
use wirerecon_core::geometry::{CameraParameters, ViewId};

use crate::{CliError, Context};

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Correspondence file with 3D-2D pairs.
    #[arg(long)]
    pub correspondences: PathBuf,
    /// View the correspondences belong to; defaults to the file's own.
    #[arg(long)]
    pub view: Option<ViewId>,
    /// Inlier threshold, pixels.
    #[arg(long, default_value_t = 2.0)]
    pub ransac_threshold: f64,
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    /// Levenberg-Marquardt iteration cap.
    #[arg(long, default_value_t = 100)]
    pub refine_iterations: usize,
    /// Camera bundle output.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(ctx: &Context, args: &CalibrateArgs) -> Result<(), CliError> {
    if !(args.ransac_threshold > 0.0) || args.iterations == 0 {
        return Err(CliError::usage("--ransac-threshold and --iterations must be positive"));
    }
    let file = load_correspondences(&args.correspondences)?;
    let view = args.view.unwrap_or(file.view);
    let corr = &file.correspondences;
    let cfg = RansacConfig {
        iterations: args.iterations,
        inlier_threshold: args.ransac_threshold,
        seed: ctx.seed,
        ..Default::default()
    };
    let ransac = ransac_projection(corr, &cfg)?;
    let inliers: Vec<_> = corr
        .iter()
        .zip(&ransac.inliers)
        .filter(|(_, &m)| m)
        .map(|(c, _)| *c)
        .collect();
    let refined = refine_projection(&ransac.projection, &inliers, args.refine_iterations, 1e-12)?;
    let camera = CameraParameters::from_projection(&refined.projection)?;
    let rms = rms_reprojection_error(&camera.p, &inliers);
    if !rms.is_finite() {
        return Err(CliError::Numerical("reprojection error is not finite".into()));
    }
    let out = ctx.resolve(&args.out);
    save_camera_bundle(&out, &CameraBundle::from_camera(view, &camera))?;
    log::info!("{} of {} correspondences are inliers", inliers.len(), corr.len());
    println!(
        "view {view}: {} inliers of {}, RMS reprojection error {rms:.6e} px",
        inliers.len(),
        corr.len()
    );
    Ok(())
}
