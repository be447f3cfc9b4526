use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{total_loss, Target};
use super::network::{backward, forward_cached};
use super::optim::{NAdam, PlateauScheduler};
use super::{FrameTensor, ModelConfig, ModelParams, PredictorError, TrainingConfig, TrainingSample};

/// One row of the training log. Epoch 0 evaluates the initial parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    /// Parameters with the lowest validation loss seen.
    pub params: ModelParams,
    pub log: Vec<LogRow>,
    pub best_epoch: usize,
}

/// Loss of one sequence and its gradient with respect to every parameter.
pub fn loss_and_grad(
    params: &ModelParams,
    frames: &[FrameTensor],
    target: &Target,
    cfg: &TrainingConfig,
) -> Result<(f64, ModelParams), PredictorError> {
    let mut grad = ModelParams::zeros(&params.config)?;
    let l = accumulate(params, frames, target, cfg, &mut grad)?;
    Ok((l, grad))
}

fn accumulate(
    params: &ModelParams,
    frames: &[FrameTensor],
    target: &Target,
    cfg: &TrainingConfig,
    grad: &mut ModelParams,
) -> Result<f64, PredictorError> {
    let (out, cache) = forward_cached(params, frames)?;
    let (l, g) = total_loss(&out, target, cfg)?;
    backward(params, &cache, &g.to_output_grad(), grad)?;
    Ok(l)
}

fn targets(samples: &[TrainingSample], model: &ModelConfig) -> Result<Vec<Target>, PredictorError> {
    samples
        .iter()
        .map(|s| {
            if s.target.offsets.len() > model.max_segments {
                return Err(PredictorError::LengthExceedsM {
                    length: s.target.offsets.len(),
                    max: model.max_segments,
                });
            }
            Target::from_spherical(&s.target, model.representation)
        })
        .collect()
}

fn mean_loss(
    params: &ModelParams,
    samples: &[TrainingSample],
    targets: &[Target],
    cfg: &TrainingConfig,
) -> Result<f64, PredictorError> {
    let mut sum = 0.0;
    for (s, t) in samples.iter().zip(targets) {
        let out = super::forward(params, &s.frames)?;
        sum += total_loss(&out, t, cfg)?.0;
    }
    Ok(sum / samples.len() as f64)
}

/// Mean loss of `params` over `samples`.
pub fn dataset_loss(
    params: &ModelParams,
    samples: &[TrainingSample],
    cfg: &TrainingConfig,
) -> Result<f64, PredictorError> {
    if samples.is_empty() {
        return Err(PredictorError::EmptyDataset("no samples".into()));
    }
    let t = targets(samples, &params.config)?;
    mean_loss(params, samples, &t, cfg)
}

/// Minibatch NAdam on the mean loss with global-norm clipping, a plateau
/// scheduler on validation loss and early stopping. Returns the
/// best-validation parameters.
pub fn train(
    train_set: &[TrainingSample],
    val_set: &[TrainingSample],
    model: &ModelConfig,
    cfg: &TrainingConfig,
) -> Result<TrainResult, PredictorError> {
    cfg.validate()?;
    model.validate()?;
    if model.max_segments != cfg.max_segments {
        return Err(PredictorError::InvalidConfig(format!(
            "model holds {} segments, training expects {}",
            model.max_segments, cfg.max_segments
        )));
    }
    if train_set.is_empty() {
        return Err(PredictorError::EmptyDataset("training split is empty".into()));
    }
    if val_set.is_empty() {
        return Err(PredictorError::EmptyDataset("validation split is empty".into()));
    }
    let train_t = targets(train_set, model)?;
    let val_t = targets(val_set, model)?;

    let mut params = ModelParams::init(model, cfg.seed)?;
    let mut opt = NAdam::new(&params, cfg.lr);
    let mut sched = PlateauScheduler::new(cfg.scheduler_factor, cfg.scheduler_patience);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0fde);

    let check = |l: f64, epoch: usize| {
        if l.is_finite() {
            Ok(l)
        } else {
            Err(PredictorError::NonFiniteLoss(epoch))
        }
    };
    let train0 = check(mean_loss(&params, train_set, &train_t, cfg)?, 0)?;
    let val0 = check(mean_loss(&params, val_set, &val_t, cfg)?, 0)?;
    let mut log = vec![LogRow {
        epoch: 0,
        train_loss: train0,
        val_loss: val0,
        lr: opt.lr,
    }];
    let mut best = (val0, 0usize, params.clone());

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut grad = ModelParams::zeros(model)?;
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            grad.scale(0.0);
            let mut batch_loss = 0.0;
            for &i in batch {
                batch_loss += accumulate(&params, &train_set[i].frames, &train_t[i], cfg, &mut grad)?;
            }
            check(batch_loss, epoch)?;
            grad.scale(1.0 / batch.len() as f64);
            let norm = grad.norm_squared().sqrt();
            if norm > cfg.grad_clip {
                grad.scale(cfg.grad_clip / norm);
            }
            opt.step(&mut params, &grad);
        }
        if !params.is_finite() {
            return Err(PredictorError::NonFiniteLoss(epoch));
        }
        let train_loss = check(mean_loss(&params, train_set, &train_t, cfg)?, epoch)?;
        let val_loss = check(mean_loss(&params, val_set, &val_t, cfg)?, epoch)?;
        log.push(LogRow {
            epoch,
            train_loss,
            val_loss,
            lr: opt.lr,
        });
        if val_loss < best.0 {
            best = (val_loss, epoch, params.clone());
        }
        opt.lr = sched.observe(val_loss, opt.lr);
        if epoch - best.1 >= cfg.early_stop_patience {
            break;
        }
    }
    Ok(TrainResult {
        params: best.2,
        log,
        best_epoch: best.1,
    })
}
