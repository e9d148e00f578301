//! AdamW with decoupled weight decay, plus the cosine learning-rate
//! schedule. Moments accumulate in f64 regardless of the working precision.

use hint_core::{ParamSet, Scalar};

use crate::error::{CliError, Result};

const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
pub struct AdamWCfg {
    pub betas: (f64, f64),
    pub weight_decay: f64,
}

impl Default for AdamWCfg {
    fn default() -> Self {
        AdamWCfg { betas: (0.9, 0.999), weight_decay: 1e-4 }
    }
}

pub struct AdamW {
    cfg: AdamWCfg,
    /// Per parameter, in `ParamSet` iteration order.
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

impl AdamW {
    pub fn new<T: Scalar>(params: &ParamSet<T>, cfg: AdamWCfg) -> Self {
        let m = params.iter().map(|p| vec![0.0; p.numel()]).collect();
        let v = params.iter().map(|p| vec![0.0; p.numel()]).collect();
        AdamW { cfg, m, v, t: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One decoupled update: `w -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * w)`.
    /// Parameters without a gradient this step still decay.
    pub fn step<T: Scalar>(&mut self, params: &ParamSet<T>, lr: f64) -> Result<()> {
        self.t += 1;
        let (b1, b2) = self.cfg.betas;
        let bc1 = 1.0 - b1.powi(self.t as i32);
        let bc2 = 1.0 - b2.powi(self.t as i32);
        for (pi, p) in params.iter().enumerate() {
            if !p.trainable() {
                continue;
            }
            let grad = p.grad().unwrap_or_else(|| vec![T::ZERO; p.numel()]);
            if let Some(i) = grad.iter().position(|g| !g.to_f64().is_finite()) {
                return Err(CliError::Numeric(format!(
                    "non-finite gradient in {} at element {i}",
                    p.name()
                )));
            }
            let (m, v) = (&mut self.m[pi], &mut self.v[pi]);
            p.tensor().modify(|w| {
                for i in 0..w.len() {
                    let g = grad[i].to_f64();
                    m[i] = b1 * m[i] + (1.0 - b1) * g;
                    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                    let m_hat = m[i] / bc1;
                    let v_hat = v[i] / bc2;
                    let wd = w[i].to_f64();
                    let upd = m_hat / (v_hat.sqrt() + ADAM_EPS) + self.cfg.weight_decay * wd;
                    w[i] = T::from_f64(wd - lr * upd);
                }
            });
        }
        Ok(())
    }
}

/// Cosine decay from `lr_max` (step 0) to `lr_min` (last step).
pub fn cosine_lr(step: u64, total_steps: u64, lr_max: f64, lr_min: f64) -> f64 {
    if total_steps <= 1 {
        return lr_max;
    }
    let t = step.min(total_steps - 1) as f64 / (total_steps - 1) as f64;
    lr_min + 0.5 * (lr_max - lr_min) * (1.0 + (std::f64::consts::PI * t).cos())
}
