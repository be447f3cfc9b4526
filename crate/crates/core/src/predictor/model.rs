use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use super::PredictorError;

/// What the offset head predicts per segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    /// Cumulative `(delta_theta, delta_phi)` per fixed-length step.
    Spherical,
    /// Point positions relative to the tip, mm.
    Cartesian,
}

impl Representation {
    /// Scalars per segment.
    pub fn components(self) -> usize {
        match self {
            Representation::Spherical => 2,
            Representation::Cartesian => 3,
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Representation::Spherical => "spherical",
            Representation::Cartesian => "cartesian",
        })
    }
}

impl FromStr for Representation {
    type Err = PredictorError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "spherical" => Ok(Representation::Spherical),
            "cartesian" => Ok(Representation::Cartesian),
            other => Err(PredictorError::InvalidConfig(format!(
                "unknown representation '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Frame side, pixels.
    pub image_size: usize,
    pub patch_size: usize,
    /// Embedder output size `D`.
    pub feature_dim: usize,
    /// GRU state size `H`.
    pub hidden_dim: usize,
    /// Segment capacity `M` of the offset and stop heads.
    pub max_segments: usize,
    pub representation: Representation,
    /// Tip head output is multiplied by this, mm.
    pub tip_scale_mm: f64,
    /// Cartesian offsets are multiplied by this, mm.
    pub offset_scale_mm: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            image_size: 64,
            patch_size: 8,
            feature_dim: 32,
            hidden_dim: 32,
            max_segments: 64,
            representation: Representation::Spherical,
            tip_scale_mm: 10.0,
            offset_scale_mm: 10.0,
        }
    }
}

impl ModelConfig {
    /// 64 px frames, `D = H = 32`, `M = 16`.
    pub fn desk_scale() -> Self {
        Self {
            max_segments: 16,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PredictorError> {
        let ok = self.patch_size > 0
            && self.image_size > 0
            && self.image_size.is_multiple_of(self.patch_size)
            && self.feature_dim > 0
            && self.hidden_dim > 0
            && self.max_segments > 0
            && self.tip_scale_mm > 0.0
            && self.offset_scale_mm > 0.0;
        if ok {
            Ok(())
        } else {
            Err(PredictorError::InvalidConfig(format!("{self:?}")))
        }
    }

    pub fn patch_count(&self) -> usize {
        let n = self.image_size / self.patch_size;
        n * n
    }

    pub fn patch_len(&self) -> usize {
        self.patch_size * self.patch_size
    }

    /// Offset head width: `components * M`.
    pub fn offset_len(&self) -> usize {
        self.representation.components() * self.max_segments
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedder {
    /// `D x patch_len`.
    pub weight: DMatrix<f64>,
    /// `D x patch_count`, one column per patch position.
    pub pos_bias: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gru {
    pub w_u: DMatrix<f64>,
    pub u_u: DMatrix<f64>,
    pub b_u: DVector<f64>,
    pub w_r: DMatrix<f64>,
    pub u_r: DMatrix<f64>,
    pub b_r: DVector<f64>,
    pub w_c: DMatrix<f64>,
    pub u_c: DMatrix<f64>,
    pub b_c: DVector<f64>,
}

/// Affine map `weight * h + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct Head {
    pub weight: DMatrix<f64>,
    pub bias: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub embedder: Embedder,
    pub gru: Gru,
    pub tip_head: Head,
    pub offset_head: Head,
    pub stop_head: Head,
}

impl Embedder {
    fn zeros(c: &ModelConfig) -> Self {
        Self {
            weight: DMatrix::zeros(c.feature_dim, c.patch_len()),
            pos_bias: DMatrix::zeros(c.feature_dim, c.patch_count()),
        }
    }
}

impl Gru {
    fn zeros(d: usize, h: usize) -> Self {
        Self {
            w_u: DMatrix::zeros(h, d),
            u_u: DMatrix::zeros(h, h),
            b_u: DVector::zeros(h),
            w_r: DMatrix::zeros(h, d),
            u_r: DMatrix::zeros(h, h),
            b_r: DVector::zeros(h),
            w_c: DMatrix::zeros(h, d),
            u_c: DMatrix::zeros(h, h),
            b_c: DVector::zeros(h),
        }
    }

    pub(crate) fn tensors(&self) -> [&[f64]; 9] {
        [
            self.w_u.as_slice(),
            self.u_u.as_slice(),
            self.b_u.as_slice(),
            self.w_r.as_slice(),
            self.u_r.as_slice(),
            self.b_r.as_slice(),
            self.w_c.as_slice(),
            self.u_c.as_slice(),
            self.b_c.as_slice(),
        ]
    }
}

impl Head {
    fn zeros(out: usize, h: usize) -> Self {
        Self {
            weight: DMatrix::zeros(out, h),
            bias: DVector::zeros(out),
        }
    }
}

const TENSOR_NAMES: [&str; 17] = [
    "embedder.weight",
    "embedder.pos_bias",
    "gru.w_u",
    "gru.u_u",
    "gru.b_u",
    "gru.w_r",
    "gru.u_r",
    "gru.b_r",
    "gru.w_c",
    "gru.u_c",
    "gru.b_c",
    "tip_head.weight",
    "tip_head.bias",
    "offset_head.weight",
    "offset_head.bias",
    "stop_head.weight",
    "stop_head.bias",
];

impl ModelParams {
    /// All-zero parameters; also used as a gradient accumulator.
    pub fn zeros(config: &ModelConfig) -> Result<Self, PredictorError> {
        config.validate()?;
        let (d, h, m) = (config.feature_dim, config.hidden_dim, config.max_segments);
        Ok(Self {
            config: config.clone(),
            embedder: Embedder::zeros(config),
            gru: Gru::zeros(d, h),
            tip_head: Head::zeros(3, h),
            offset_head: Head::zeros(config.offset_len(), h),
            stop_head: Head::zeros(m, h),
        })
    }

    /// Glorot-uniform weights, sine-cosine positional bias, zero biases.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self, PredictorError> {
        let mut p = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut glorot = |m: &mut DMatrix<f64>| {
            let a = (6.0 / (m.nrows() + m.ncols()) as f64).sqrt();
            let dist = Uniform::new_inclusive(-a, a).expect("valid bounds");
            for v in m.iter_mut() {
                *v = dist.sample(&mut rng);
            }
        };
        glorot(&mut p.embedder.weight);
        glorot(&mut p.gru.w_u);
        glorot(&mut p.gru.u_u);
        glorot(&mut p.gru.w_r);
        glorot(&mut p.gru.u_r);
        glorot(&mut p.gru.w_c);
        glorot(&mut p.gru.u_c);
        glorot(&mut p.tip_head.weight);
        glorot(&mut p.offset_head.weight);
        glorot(&mut p.stop_head.weight);
        // 2D sine-cosine pattern over the patch grid plus small noise, so
        // that patches differ in where they sit on the tanh curve.
        let normal = Normal::new(0.0, 0.1).expect("valid sigma");
        let side = config.image_size / config.patch_size;
        for d in 0..config.feature_dim {
            let freq = PI * (1 + (d / 4) % 4) as f64 / 2.0;
            let phase = if (d / 2) % 2 == 0 { 0.0 } else { PI / 2.0 };
            for i in 0..config.patch_count() {
                let (gx, gy) = ((i % side) as f64, (i / side) as f64);
                let u = if d % 2 == 0 { gx } else { gy };
                let u = 2.0 * (u + 0.5) / side as f64 - 1.0;
                p.embedder.pos_bias[(d, i)] = (freq * u + phase).sin() + normal.sample(&mut rng);
            }
        }
        // Start the stop head near the base rate of a single terminal.
        let prior = 1.0 / config.max_segments as f64;
        p.stop_head.bias.fill((prior / (1.0 - prior)).ln().max(-10.0));
        Ok(p)
    }

    pub fn tensors(&self) -> [&[f64]; 17] {
        let g = self.gru.tensors();
        [
            self.embedder.weight.as_slice(),
            self.embedder.pos_bias.as_slice(),
            g[0],
            g[1],
            g[2],
            g[3],
            g[4],
            g[5],
            g[6],
            g[7],
            g[8],
            self.tip_head.weight.as_slice(),
            self.tip_head.bias.as_slice(),
            self.offset_head.weight.as_slice(),
            self.offset_head.bias.as_slice(),
            self.stop_head.weight.as_slice(),
            self.stop_head.bias.as_slice(),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 17] {
        let g = &mut self.gru;
        [
            self.embedder.weight.as_mut_slice(),
            self.embedder.pos_bias.as_mut_slice(),
            g.w_u.as_mut_slice(),
            g.u_u.as_mut_slice(),
            g.b_u.as_mut_slice(),
            g.w_r.as_mut_slice(),
            g.u_r.as_mut_slice(),
            g.b_r.as_mut_slice(),
            g.w_c.as_mut_slice(),
            g.u_c.as_mut_slice(),
            g.b_c.as_mut_slice(),
            self.tip_head.weight.as_mut_slice(),
            self.tip_head.bias.as_mut_slice(),
            self.offset_head.weight.as_mut_slice(),
            self.offset_head.bias.as_mut_slice(),
            self.stop_head.weight.as_mut_slice(),
            self.stop_head.bias.as_mut_slice(),
        ]
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Sum of squares over every tensor.
    pub fn norm_squared(&self) -> f64 {
        self.tensors().iter().flat_map(|t| t.iter()).map(|v| v * v).sum()
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.tensors_mut() {
            for v in t.iter_mut() {
                *v *= s;
            }
        }
    }

    /// `self += other`; both must share a configuration.
    pub fn add_assign(&mut self, other: &ModelParams) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    fn shapes(&self) -> [(usize, usize); 17] {
        let s = |m: &DMatrix<f64>| (m.nrows(), m.ncols());
        let v = |m: &DVector<f64>| (m.nrows(), 1);
        let g = &self.gru;
        [
            s(&self.embedder.weight),
            s(&self.embedder.pos_bias),
            s(&g.w_u),
            s(&g.u_u),
            v(&g.b_u),
            s(&g.w_r),
            s(&g.u_r),
            v(&g.b_r),
            s(&g.w_c),
            s(&g.u_c),
            v(&g.b_c),
            s(&self.tip_head.weight),
            v(&self.tip_head.bias),
            s(&self.offset_head.weight),
            v(&self.offset_head.bias),
            s(&self.stop_head.weight),
            v(&self.stop_head.bias),
        ]
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let tensors = TENSOR_NAMES
            .iter()
            .zip(self.shapes())
            .zip(self.tensors())
            .map(|((name, (rows, cols)), data)| {
                // Stored row-major.
                let mut row_major = Vec::with_capacity(data.len());
                for r in 0..rows {
                    for c in 0..cols {
                        row_major.push(data[c * rows + r]);
                    }
                }
                TensorRecord {
                    name: (*name).to_string(),
                    rows,
                    cols,
                    data: row_major,
                }
            })
            .collect();
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: 1,
            config: self.config.clone(),
            tensors,
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, PredictorError> {
        if ck.format != CHECKPOINT_FORMAT || ck.version != 1 {
            return Err(PredictorError::InvalidCheckpoint(format!(
                "unsupported checkpoint {} v{}",
                ck.format, ck.version
            )));
        }
        let mut p = Self::zeros(&ck.config)?;
        if ck.tensors.len() != TENSOR_NAMES.len() {
            return Err(PredictorError::InvalidCheckpoint(format!(
                "expected {} tensors, found {}",
                TENSOR_NAMES.len(),
                ck.tensors.len()
            )));
        }
        let shapes = p.shapes();
        for (i, dst) in p.tensors_mut().into_iter().enumerate() {
            let rec = &ck.tensors[i];
            let (rows, cols) = shapes[i];
            if rec.name != TENSOR_NAMES[i] || rec.rows != rows || rec.cols != cols {
                return Err(PredictorError::InvalidCheckpoint(format!(
                    "tensor {i}: expected {} {rows}x{cols}, found {} {}x{}",
                    TENSOR_NAMES[i], rec.name, rec.rows, rec.cols
                )));
            }
            if rec.data.len() != rows * cols || !rec.data.iter().all(|v| v.is_finite()) {
                return Err(PredictorError::InvalidCheckpoint(format!(
                    "tensor {} has bad data",
                    rec.name
                )));
            }
            for r in 0..rows {
                for c in 0..cols {
                    dst[c * rows + r] = rec.data[r * cols + c];
                }
            }
        }
        Ok(p)
    }
}

pub const CHECKPOINT_FORMAT: &str = "wirerecon-model";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    /// Row-major values.
    pub data: Vec<f64>,
}

/// Serializable form of [`ModelParams`]: a dimension header followed by
/// every parameter array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: ModelConfig,
    pub tensors: Vec<TensorRecord>,
}
