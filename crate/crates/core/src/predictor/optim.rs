use super::ModelParams;

const MOMENTUM_DECAY: f64 = 4e-3;

/// Adam with Nesterov momentum and the 0.96-power momentum warmup schedule.
#[derive(Debug, Clone)]
pub struct NAdam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    mu_product: f64,
    m: ModelParams,
    v: ModelParams,
}

impl NAdam {
    pub fn new(params: &ModelParams, lr: f64) -> Self {
        let mut m = params.clone();
        m.scale(0.0);
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            mu_product: 1.0,
            v: m.clone(),
            m,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    fn mu(&self, t: u64) -> f64 {
        self.beta1 * (1.0 - 0.5 * 0.96f64.powf(t as f64 * MOMENTUM_DECAY))
    }

    pub fn step(&mut self, params: &mut ModelParams, grad: &ModelParams) {
        self.step += 1;
        let t = self.step;
        let mu_t = self.mu(t);
        let mu_next = self.mu(t + 1);
        self.mu_product *= mu_t;
        let c_grad = self.lr * (1.0 - mu_t) / (1.0 - self.mu_product);
        let c_mom = self.lr * mu_next / (1.0 - self.mu_product * mu_next);
        let bias2 = 1.0 - self.beta2.powi(t as i32);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);

        let ps = params.tensors_mut();
        let ms = self.m.tensors_mut();
        let vs = self.v.tensors_mut();
        let gs = grad.tensors();
        for (((p, m), v), g) in ps.into_iter().zip(ms).zip(vs).zip(gs) {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = b1 * m[i] + (1.0 - b1) * gi;
                v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
                let denom = (v[i] / bias2).sqrt() + eps;
                p[i] -= (c_grad * gi + c_mom * m[i]) / denom;
            }
        }
    }
}

/// Multiplies the learning rate by `factor` once the monitored value has
/// failed to improve (relative threshold) for more than `patience` epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauScheduler {
    pub factor: f64,
    pub patience: usize,
    pub threshold: f64,
    pub min_lr: f64,
    best: f64,
    bad_epochs: usize,
}

impl PlateauScheduler {
    pub fn new(factor: f64, patience: usize) -> Self {
        Self {
            factor,
            patience,
            threshold: 1e-4,
            min_lr: 0.0,
            best: f64::INFINITY,
            bad_epochs: 0,
        }
    }

    pub fn bad_epochs(&self) -> usize {
        self.bad_epochs
    }

    /// Records one epoch's value and returns the learning rate to use next.
    pub fn observe(&mut self, value: f64, lr: f64) -> f64 {
        if value < self.best * (1.0 - self.threshold) {
            self.best = value;
            self.bad_epochs = 0;
        } else {
            self.bad_epochs += 1;
        }
        if self.bad_epochs > self.patience {
            self.bad_epochs = 0;
            return (lr * self.factor).max(self.min_lr);
        }
        lr
    }
}
