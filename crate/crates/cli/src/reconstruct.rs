use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use wirerecon_core::dataset_io::{load_annotation_file, load_camera_bundle, load_rig, AnnotationFile, CurveRecord};
use wirerecon_core::geometry::{Curve3D, Polyline2D, Vec2, ViewId};
use wirerecon_core::reconstruction::{
    reconstruct_curve_with, reprojection_profile, ReconstructionConfig, ReprojectionProfile, StereoRig,
};

use crate::output::{write_csv, write_json, write_text};
use crate::svg::{line_plot, Series};
use crate::{CliError, Context};

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Annotation file of one video.
    #[arg(long)]
    pub annotations: PathBuf,
    /// Camera bundle of view A.
    #[arg(long, requires = "cam_b", conflicts_with = "rig")]
    pub cam_a: Option<PathBuf>,
    /// Camera bundle of view B.
    #[arg(long, requires = "cam_a")]
    pub cam_b: Option<PathBuf>,
    /// Rig file holding both bundles, as written by `synth`.
    #[arg(long, required_unless_present = "cam_a")]
    pub rig: Option<PathBuf>,
    /// Arclength sampling step, mm.
    #[arg(long, default_value_t = 1.0)]
    pub delta_u: f64,
    /// Gaussian smoothing along arclength before resampling, mm.
    #[arg(long, default_value_t = 0.0)]
    pub smoothing_mm: f64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct ProfileRow {
    frame: usize,
    index: usize,
    err_a_px: f64,
    err_b_px: f64,
}

fn load_stereo(args: &ReconstructArgs) -> Result<StereoRig, CliError> {
    if let Some(rig) = &args.rig {
        return Ok(load_rig(rig)?.to_rig()?);
    }
    let (a, b) = (args.cam_a.as_ref().unwrap(), args.cam_b.as_ref().unwrap());
    let cam = |p: &Path, view: ViewId| -> Result<_, CliError> {
        let bundle = load_camera_bundle(p)?;
        if bundle.view_id != view {
            return Err(CliError::usage(format!(
                "{}: bundle is for view {}, expected {view}",
                p.display(),
                bundle.view_id
            )));
        }
        Ok(bundle.to_camera()?)
    };
    let (ca, cb) = (cam(a, ViewId::A)?, cam(b, ViewId::B)?);
    // Bundles carry no image size; annotation coordinates are used as is.
    Ok(StereoRig::new(ca, cb, (0, 0))?)
}

/// Annotation polyline rescaled to the rig's native resolution.
fn polyline(ann: &AnnotationFile, frame: usize, view: ViewId, scale: Vec2) -> Result<Polyline2D, CliError> {
    let p = ann.polyline(frame, view).expect("paired frame")?;
    if scale == Vec2::new(1.0, 1.0) {
        return Ok(p);
    }
    let pts = p.points().iter().map(|q| q.component_mul(&scale)).collect();
    Polyline2D::new(pts, view, frame).map_err(|e| CliError::usage(format!("frame {frame}: {e}")))
}

type FrameResult = Result<(Curve3D, ReprojectionProfile), String>;

pub fn run(ctx: &Context, args: &ReconstructArgs) -> Result<(), CliError> {
    if !(args.delta_u > 0.0) || !args.delta_u.is_finite() {
        return Err(CliError::usage(format!(
            "--delta-u must be positive, got {}",
            args.delta_u
        )));
    }
    if !(args.smoothing_mm >= 0.0) || !args.smoothing_mm.is_finite() {
        return Err(CliError::usage("--smoothing-mm must be non-negative"));
    }
    let ann = load_annotation_file(&args.annotations)?;
    let rig = load_stereo(args)?;
    let frames = ann.paired_frames();
    if frames.is_empty() {
        return Err(CliError::data(format!(
            "{}: no paired view (no frame is annotated in both A and B)",
            args.annotations.display()
        )));
    }
    let scale = if rig.image_size.0 > 0 {
        Vec2::new(
            rig.image_size.0 as f64 / ann.image_size[0] as f64,
            rig.image_size.1 as f64 / ann.image_size[1] as f64,
        )
    } else {
        Vec2::new(1.0, 1.0)
    };
    let cfg = ReconstructionConfig {
        smoothing_mm: args.smoothing_mm,
        ..Default::default()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| CliError::usage(format!("--jobs: {e}")))?;
    let polys: Vec<(usize, Polyline2D, Polyline2D)> = frames
        .iter()
        .map(|&f| {
            Ok((
                f,
                polyline(&ann, f, ViewId::A, scale)?,
                polyline(&ann, f, ViewId::B, scale)?,
            ))
        })
        .collect::<Result<_, CliError>>()?;
    let results: Vec<FrameResult> = pool.install(|| {
        polys
            .par_iter()
            .map(|(_, a, b)| {
                let curve = reconstruct_curve_with(&rig, a, b, args.delta_u, &cfg).map_err(|e| e.to_string())?;
                let profile = reprojection_profile(&rig, &curve, a, b).map_err(|e| e.to_string())?;
                Ok((curve, profile))
            })
            .collect()
    });

    let out = ctx.resolve(&args.out);
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    let mut mean_a: Vec<(f64, usize)> = Vec::new();
    let mut mean_b: Vec<f64> = Vec::new();
    for ((frame, _, _), res) in polys.iter().zip(&results) {
        match res {
            Ok((curve, profile)) => {
                write_json(
                    &out.join(format!("frame_{frame:04}.json")),
                    &CurveRecord::from_curve(*frame, curve),
                )?;
                for (i, (ea, eb)) in profile
                    .per_index_error_a
                    .iter()
                    .zip(&profile.per_index_error_b)
                    .enumerate()
                {
                    rows.push(ProfileRow {
                        frame: *frame,
                        index: i,
                        err_a_px: *ea,
                        err_b_px: *eb,
                    });
                    if mean_a.len() <= i {
                        mean_a.push((0.0, 0));
                        mean_b.push(0.0);
                    }
                    mean_a[i].0 += ea;
                    mean_a[i].1 += 1;
                    mean_b[i] += eb;
                }
            }
            Err(msg) => {
                log::warn!("frame {frame}: {msg}");
                failed.push(format!("frame {frame}: {msg}"));
            }
        }
    }
    write_csv(&out.join("profile.csv"), &rows)?;
    let series_a: Vec<(f64, f64)> = mean_a
        .iter()
        .enumerate()
        .map(|(i, &(s, n))| (i as f64, s / n as f64))
        .collect();
    let series_b: Vec<(f64, f64)> = mean_b
        .iter()
        .zip(&mean_a)
        .enumerate()
        .map(|(i, (s, &(_, n)))| (i as f64, s / n as f64))
        .collect();
    let svg = line_plot(
        "Mean reprojection error along the guidewire",
        "sample index (tip = 0)",
        "error (px)",
        &[
            Series {
                label: "view A",
                points: &series_a,
            },
            Series {
                label: "view B",
                points: &series_b,
            },
        ],
    );
    write_text(&out.join("profile.svg"), &svg)?;
    println!(
        "reconstructed {} of {} paired frames into {}",
        frames.len() - failed.len(),
        frames.len(),
        out.display()
    );
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::data(format!(
            "{} frame(s) failed: {}",
            failed.len(),
            failed.join("; ")
        )))
    }
}
