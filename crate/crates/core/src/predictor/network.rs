use nalgebra::{DMatrix, DVector};

use super::model::{Embedder, Gru, ModelParams, Representation};
use super::{FrameTensor, PredictionOutput, PredictorError};
use crate::geometry::Vec3;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Gradient of a scalar objective with respect to the model outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputGrad {
    pub tip: Vec3,
    pub offsets: Vec<f64>,
    /// With respect to the stop logits (pre-sigmoid).
    pub stop_logits: Vec<f64>,
}

/// Patches as columns: `patch_len x patch_count`.
fn patch_matrix(params: &ModelParams, frame: &FrameTensor) -> Result<DMatrix<f64>, PredictorError> {
    let c = &params.config;
    let p = c.patch_size;
    if frame.width != c.image_size
        || frame.height != c.image_size
        || !frame.width.is_multiple_of(p)
        || !frame.height.is_multiple_of(p)
        || frame.pixels.len() != frame.width * frame.height
    {
        return Err(PredictorError::DimensionMismatch(format!(
            "frame {}x{} does not match {}x{} with patch {}",
            frame.width, frame.height, c.image_size, c.image_size, p
        )));
    }
    let per_row = frame.width / p;
    let mut x = DMatrix::zeros(p * p, c.patch_count());
    for py in 0..frame.height / p {
        for px in 0..per_row {
            let col = py * per_row + px;
            for dy in 0..p {
                for dx in 0..p {
                    x[(dy * p + dx, col)] = frame.get(px * p + dx, py * p + dy);
                }
            }
        }
    }
    Ok(x)
}

struct EmbedCache {
    patches: DMatrix<f64>,
    /// `tanh(W X + B)`.
    act: DMatrix<f64>,
}

fn embed_cached(params: &ModelParams, frame: &FrameTensor) -> Result<(DVector<f64>, EmbedCache), PredictorError> {
    let patches = patch_matrix(params, frame)?;
    let e = &params.embedder;
    let mut act = &e.weight * &patches + &e.pos_bias;
    act.apply(|v| *v = v.tanh());
    let n = act.ncols() as f64;
    let z = act.column_sum() / n;
    Ok((z, EmbedCache { patches, act }))
}

/// Mean over patches of `tanh(W x_i + b_i)`.
pub fn embed_frame(params: &ModelParams, frame: &FrameTensor) -> Result<DVector<f64>, PredictorError> {
    Ok(embed_cached(params, frame)?.0)
}

fn embed_backward(cache: &EmbedCache, dz: &DVector<f64>, grad: &mut Embedder) {
    let n = cache.act.ncols() as f64;
    let mut da = cache.act.map(|t| 1.0 - t * t);
    for mut col in da.column_iter_mut() {
        col.component_mul_assign(dz);
        col /= n;
    }
    grad.weight.gemm(1.0, &da, &cache.patches.transpose(), 1.0);
    grad.pos_bias += &da;
}

/// Vector-Jacobian product of [`embed_frame`]: gradients of `dz . z` with
/// respect to the embedder parameters.
pub fn embed_frame_grad(
    params: &ModelParams,
    frame: &FrameTensor,
    dz: &DVector<f64>,
) -> Result<Embedder, PredictorError> {
    let (_, cache) = embed_cached(params, frame)?;
    let mut g = ModelParams::zeros(&params.config)?.embedder;
    embed_backward(&cache, dz, &mut g);
    Ok(g)
}

struct GruCache {
    z: DVector<f64>,
    h_prev: DVector<f64>,
    u: DVector<f64>,
    r: DVector<f64>,
    c: DVector<f64>,
    rh: DVector<f64>,
}

fn check_gru_dims(g: &Gru, z: &DVector<f64>, h: &DVector<f64>) -> Result<(), PredictorError> {
    if z.len() != g.w_u.ncols() || h.len() != g.u_u.ncols() {
        return Err(PredictorError::DimensionMismatch(format!(
            "GRU expects input {} and state {}, got {} and {}",
            g.w_u.ncols(),
            g.u_u.ncols(),
            z.len(),
            h.len()
        )));
    }
    Ok(())
}

fn gru_cached(g: &Gru, z: &DVector<f64>, h: &DVector<f64>) -> (DVector<f64>, GruCache) {
    let u = (&g.w_u * z + &g.u_u * h + &g.b_u).map(sigmoid);
    let r = (&g.w_r * z + &g.u_r * h + &g.b_r).map(sigmoid);
    let rh = r.component_mul(h);
    let c = (&g.w_c * z + &g.u_c * &rh + &g.b_c).map(f64::tanh);
    let h_new = h + u.component_mul(&(&c - h));
    (
        h_new,
        GruCache {
            z: z.clone(),
            h_prev: h.clone(),
            u,
            r,
            c,
            rh,
        },
    )
}

/// `h_t = (1 - u) * h + u * c` with update gate `u`, reset gate `r` and
/// candidate `c = tanh(W_c z + U_c (r * h) + b_c)`.
pub fn gru_step(params: &ModelParams, z: &DVector<f64>, h_prev: &DVector<f64>) -> Result<DVector<f64>, PredictorError> {
    check_gru_dims(&params.gru, z, h_prev)?;
    Ok(gru_cached(&params.gru, z, h_prev).0)
}

/// Returns `(dz, dh_prev)` and accumulates parameter gradients.
fn gru_backward(g: &Gru, cache: &GruCache, dh: &DVector<f64>, grad: &mut Gru) -> (DVector<f64>, DVector<f64>) {
    let GruCache { z, h_prev, u, r, c, rh } = cache;
    let dc = dh.component_mul(u);
    let du = dh.component_mul(&(c - h_prev));
    let mut dh_prev = dh.component_mul(&u.map(|v| 1.0 - v));

    let da_c = dc.component_mul(&c.map(|v| 1.0 - v * v));
    grad.w_c.ger(1.0, &da_c, z, 1.0);
    grad.u_c.ger(1.0, &da_c, rh, 1.0);
    grad.b_c += &da_c;
    let mut dz = g.w_c.tr_mul(&da_c);
    let drh = g.u_c.tr_mul(&da_c);
    let dr = drh.component_mul(h_prev);
    dh_prev += drh.component_mul(r);

    let da_u = du.component_mul(&u.map(|v| v * (1.0 - v)));
    grad.w_u.ger(1.0, &da_u, z, 1.0);
    grad.u_u.ger(1.0, &da_u, h_prev, 1.0);
    grad.b_u += &da_u;
    dz += g.w_u.tr_mul(&da_u);
    dh_prev += g.u_u.tr_mul(&da_u);

    let da_r = dr.component_mul(&r.map(|v| v * (1.0 - v)));
    grad.w_r.ger(1.0, &da_r, z, 1.0);
    grad.u_r.ger(1.0, &da_r, h_prev, 1.0);
    grad.b_r += &da_r;
    dz += g.w_r.tr_mul(&da_r);
    dh_prev += g.u_r.tr_mul(&da_r);

    (dz, dh_prev)
}

/// Vector-Jacobian product of [`gru_step`]: parameter gradients of
/// `dh . h_t`, plus its gradients with respect to `z` and `h_prev`.
pub fn gru_step_grad(
    params: &ModelParams,
    z: &DVector<f64>,
    h_prev: &DVector<f64>,
    dh: &DVector<f64>,
) -> Result<(Gru, DVector<f64>, DVector<f64>), PredictorError> {
    check_gru_dims(&params.gru, z, h_prev)?;
    let (_, cache) = gru_cached(&params.gru, z, h_prev);
    let mut g = ModelParams::zeros(&params.config)?.gru;
    let (dz, dhp) = gru_backward(&params.gru, &cache, dh, &mut g);
    Ok((g, dz, dhp))
}

pub(crate) struct ForwardCache {
    embeds: Vec<EmbedCache>,
    grus: Vec<GruCache>,
    h: DVector<f64>,
}

pub(crate) fn forward_cached(
    params: &ModelParams,
    frames: &[FrameTensor],
) -> Result<(PredictionOutput, ForwardCache), PredictorError> {
    if frames.is_empty() {
        return Err(PredictorError::EmptySequence);
    }
    let cfg = &params.config;
    let mut h = DVector::zeros(cfg.hidden_dim);
    let mut embeds = Vec::with_capacity(frames.len());
    let mut grus = Vec::with_capacity(frames.len());
    for f in frames {
        let (z, ec) = embed_cached(params, f)?;
        let (h_new, gc) = gru_cached(&params.gru, &z, &h);
        embeds.push(ec);
        grus.push(gc);
        h = h_new;
    }
    let tip_raw = &params.tip_head.weight * &h + &params.tip_head.bias;
    let tip = Vec3::new(tip_raw[0], tip_raw[1], tip_raw[2]) * cfg.tip_scale_mm;
    let mut offsets: Vec<f64> = (&params.offset_head.weight * &h + &params.offset_head.bias)
        .iter()
        .copied()
        .collect();
    if cfg.representation == Representation::Cartesian {
        for v in &mut offsets {
            *v *= cfg.offset_scale_mm;
        }
    }
    let stop_probs = (&params.stop_head.weight * &h + &params.stop_head.bias)
        .iter()
        .map(|&q| sigmoid(q))
        .collect();
    Ok((
        PredictionOutput {
            tip,
            offsets,
            stop_probs,
            representation: cfg.representation,
        },
        ForwardCache { embeds, grus, h },
    ))
}

/// Embeds each frame, runs the GRU from a zero state and applies the three
/// heads to the final state.
pub fn forward(params: &ModelParams, frames: &[FrameTensor]) -> Result<PredictionOutput, PredictorError> {
    Ok(forward_cached(params, frames)?.0)
}

pub(crate) fn backward(
    params: &ModelParams,
    cache: &ForwardCache,
    dout: &OutputGrad,
    grad: &mut ModelParams,
) -> Result<(), PredictorError> {
    let cfg = &params.config;
    if dout.offsets.len() != cfg.offset_len() || dout.stop_logits.len() != cfg.max_segments {
        return Err(PredictorError::DimensionMismatch(
            "output gradient does not match the heads".into(),
        ));
    }
    let h = &cache.h;
    let dtip = DVector::from_column_slice(&[dout.tip.x, dout.tip.y, dout.tip.z]) * cfg.tip_scale_mm;
    let off_scale = match cfg.representation {
        Representation::Spherical => 1.0,
        Representation::Cartesian => cfg.offset_scale_mm,
    };
    let doff = DVector::from_column_slice(&dout.offsets) * off_scale;
    let dstop = DVector::from_column_slice(&dout.stop_logits);

    grad.tip_head.weight.ger(1.0, &dtip, h, 1.0);
    grad.tip_head.bias += &dtip;
    grad.offset_head.weight.ger(1.0, &doff, h, 1.0);
    grad.offset_head.bias += &doff;
    grad.stop_head.weight.ger(1.0, &dstop, h, 1.0);
    grad.stop_head.bias += &dstop;

    let mut dh = params.tip_head.weight.tr_mul(&dtip)
        + params.offset_head.weight.tr_mul(&doff)
        + params.stop_head.weight.tr_mul(&dstop);
    for t in (0..cache.grus.len()).rev() {
        let (dz, dh_prev) = gru_backward(&params.gru, &cache.grus[t], &dh, &mut grad.gru);
        embed_backward(&cache.embeds[t], &dz, &mut grad.embedder);
        dh = dh_prev;
    }
    Ok(())
}

/// Vector-Jacobian product of [`forward`] over every parameter.
pub fn forward_grad(
    params: &ModelParams,
    frames: &[FrameTensor],
    dout: &OutputGrad,
) -> Result<ModelParams, PredictorError> {
    let (_, cache) = forward_cached(params, frames)?;
    let mut grad = ModelParams::zeros(&params.config)?;
    backward(params, &cache, dout, &mut grad)?;
    Ok(grad)
}
