use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    advancing_trajectory, gen_curve, make_camera_pair_sized, render_sequence, CurveGenParams, RenderConfig,
    SyntheticError, SyntheticSample, DEFAULT_IMAGE_SIZE,
};
use crate::geometry::{Curve3D, Mat3, Vec3};
use crate::reconstruction::StereoRig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigParams {
    pub baseline_angle: f64,
    pub distance_mm: f64,
    pub focal_px: f64,
    /// Native annotation resolution, pixels per side.
    pub native_size: usize,
}

impl Default for RigParams {
    fn default() -> Self {
        Self {
            baseline_angle: FRAC_PI_2,
            distance_mm: 1000.0,
            focal_px: 4000.0,
            native_size: DEFAULT_IMAGE_SIZE,
        }
    }
}

impl RigParams {
    pub fn build(&self) -> Result<StereoRig, SyntheticError> {
        make_camera_pair_sized(self.baseline_angle, self.distance_mm, self.focal_px, self.native_size)
    }
}

/// Where each generated curve is put in the world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Placement {
    /// Random position inside the generator's cube.
    Free,
    /// Proximal end at the origin plus lateral jitter; depth (world z)
    /// relative to the proximal end is multiplied by `depth_scale`.
    Anchored { depth_scale: f64, jitter_mm: f64 },
}

/// Everything needed to generate a synthetic video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub curve: CurveGenParams,
    pub placement: Placement,
    pub rig: RigParams,
    pub render: RenderConfig,
    /// Tip advance between consecutive frames, mm.
    pub advance_mm: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            curve: CurveGenParams::default(),
            placement: Placement::Free,
            rig: RigParams::default(),
            render: RenderConfig::default(),
            advance_mm: 1.0,
        }
    }
}

impl SynthParams {
    /// Short curves entering from a fixed access point, seen through a
    /// zoomed rig so a 64 px frame spans about 64 mm.
    pub fn desk_scale() -> Self {
        Self {
            curve: CurveGenParams {
                length_range: (16.0, 30.0),
                curvature_scale: 0.08,
                box_size: 1000.0,
                ..Default::default()
            },
            placement: Placement::Anchored {
                depth_scale: 0.3,
                jitter_mm: 1.0,
            },
            rig: RigParams {
                focal_px: 16000.0,
                ..Default::default()
            },
            render: RenderConfig::default(),
            advance_mm: 1.5,
        }
    }

    pub fn validate(&self) -> Result<(), SyntheticError> {
        self.curve.validate()?;
        let placement_ok = match self.placement {
            Placement::Free => true,
            Placement::Anchored { depth_scale, jitter_mm } => {
                depth_scale >= 0.0 && jitter_mm >= 0.0 && jitter_mm.is_finite()
            }
        };
        if !placement_ok || !(self.advance_mm >= 0.0) || !self.advance_mm.is_finite() {
            return Err(SyntheticError::InvalidParams(format!("{self:?}")));
        }
        Ok(())
    }
}

fn place(curve: Curve3D, placement: &Placement, rng: &mut ChaCha8Rng) -> Curve3D {
    match *placement {
        Placement::Free => curve,
        Placement::Anchored { depth_scale, jitter_mm } => {
            let end = curve.points()[curve.len() - 1];
            let s = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, depth_scale));
            let shift = if jitter_mm > 0.0 {
                Vec3::new(
                    rng.random_range(-jitter_mm..jitter_mm),
                    rng.random_range(-jitter_mm..jitter_mm),
                    0.0,
                )
            } else {
                Vec3::zeros()
            };
            curve.transformed(&s, &(shift - s * end))
        }
    }
}

/// Shortest part of the curve shown in the first frame of a video, as a
/// fraction of its full length.
pub const MIN_VISIBLE_FRACTION: f64 = 0.25;

/// One video of `frames` time steps. The final frame shows the full
/// generated curve; earlier frames show it retracted by `advance_mm` per
/// step, reduced for long videos so that the first frame still shows
/// `MIN_VISIBLE_FRACTION` of the curve. Frame windows and annotation noise follow `params.render`, whose
/// seed is replaced by `seed`.
pub fn generate_video(params: &SynthParams, frames: usize, seed: u64) -> Result<Vec<SyntheticSample>, SyntheticError> {
    params.validate()?;
    if frames == 0 {
        return Err(SyntheticError::InvalidParams("a video needs at least one frame".into()));
    }
    let rig = params.rig.build()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let curve = gen_curve(&CurveGenParams {
        seed: rng.random(),
        ..params.curve.clone()
    })?;
    let curve = place(curve, &params.placement, &mut rng);
    let advance = if frames > 1 {
        let room = (1.0 - MIN_VISIBLE_FRACTION) * curve.length() / (frames - 1) as f64;
        params.advance_mm.min(room)
    } else {
        params.advance_mm
    };
    let traj = advancing_trajectory(&curve, frames, advance)?;
    let render = RenderConfig {
        seed: rng.random(),
        ..params.render.clone()
    };
    render_sequence(&traj, &rig, &render)
}
