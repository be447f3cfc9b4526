use serde::{Deserialize, Serialize};

use super::{decompose_projection, CalibrationError, LwmModel};
use crate::geometry::{CameraParameters, Mat3, Mat34, Vec3, ViewId};

/// On-disk calibration result for one view. Matrices are row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraBundle {
    pub view_id: ViewId,
    #[serde(rename = "K")]
    pub k: [f64; 9],
    #[serde(rename = "R")]
    pub r: [f64; 9],
    pub t: [f64; 3],
    #[serde(rename = "P")]
    pub p: [f64; 12],
    pub lwm: Option<LwmModel>,
}

fn row_major<const R: usize, const C: usize, const N: usize>(m: &nalgebra::SMatrix<f64, R, C>) -> [f64; N] {
    let mut out = [0.0; N];
    for r in 0..R {
        for c in 0..C {
            out[r * C + c] = m[(r, c)];
        }
    }
    out
}

impl CameraBundle {
    pub fn from_camera(view_id: ViewId, camera: &CameraParameters) -> Self {
        Self {
            view_id,
            k: row_major::<3, 3, 9>(&camera.k),
            r: row_major::<3, 3, 9>(&camera.r),
            t: [camera.t.x, camera.t.y, camera.t.z],
            p: row_major::<3, 4, 12>(&camera.p),
            lwm: camera.distortion.clone(),
        }
    }

    /// Rebuilds the camera from `K`, `R`, `t`. The stored `P` must agree
    /// with their composition up to scale.
    pub fn to_camera(&self) -> Result<CameraParameters, CalibrationError> {
        let k = Mat3::from_row_slice(&self.k);
        let r = Mat3::from_row_slice(&self.r);
        let t = Vec3::from_row_slice(&self.t);
        let camera = CameraParameters::new(k, r, t).map_err(|e| CalibrationError::InvalidInput(e.to_string()))?;
        let stored = Mat34::from_row_slice(&self.p);
        let a = stored / stored.norm();
        let b = camera.p / camera.p.norm();
        if (a - b).norm().min((a + b).norm()) > 1e-6 {
            return Err(CalibrationError::InvalidInput(
                "bundle P disagrees with K [R | t]".into(),
            ));
        }
        Ok(match &self.lwm {
            Some(m) => camera.with_distortion(m.clone()),
            None => camera,
        })
    }
}

impl CameraParameters {
    /// Camera whose `K`, `R`, `t` come from decomposing `p`.
    pub fn from_projection(p: &Mat34) -> Result<Self, CalibrationError> {
        let (k, r, t) = decompose_projection(p)?;
        CameraParameters::new(k, r, t).map_err(|e| CalibrationError::InvalidInput(e.to_string()))
    }
}
