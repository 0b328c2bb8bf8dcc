use serde::{Deserialize, Serialize};

use super::{ModelError, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |b: f64| b > 0.0 && b < 1.0;
        if !(self.learning_rate > 0.0) || !in_unit(self.beta1) || !in_unit(self.beta2) {
            return Err(ModelError::Config(format!(
                "adam needs learning_rate > 0 and betas in (0, 1), got {self:?}"
            )));
        }
        if !(self.eps > 0.0) {
            return Err(ModelError::Config("adam eps must be positive".into()));
        }
        Ok(())
    }
}

/// First and second moment estimates for one parameter buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamMoments {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl AdamMoments {
    pub fn zeros(len: usize) -> Self {
        Self {
            first: vec![0.0; len],
            second: vec![0.0; len],
        }
    }
}

/// One bias-corrected Adam update at step `t` (counting from 1).
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    moments: &mut AdamMoments,
    t: u64,
    cfg: &AdamConfig,
) -> Result<()> {
    let n = params.len();
    if grads.len() != n || moments.first.len() != n || moments.second.len() != n {
        return Err(ModelError::LengthMismatch {
            what: "adam_step params/grads/moments",
            left: n,
            right: grads
                .len()
                .min(moments.first.len())
                .min(moments.second.len()),
        });
    }
    if t == 0 {
        return Err(ModelError::Config("adam step counter starts at 1".into()));
    }
    let exp = i32::try_from(t).unwrap_or(i32::MAX);
    let correct1 = 1.0 - cfg.beta1.powi(exp);
    let correct2 = 1.0 - cfg.beta2.powi(exp);
    for i in 0..n {
        let g = grads[i];
        let m = cfg.beta1 * moments.first[i] + (1.0 - cfg.beta1) * g;
        let v = cfg.beta2 * moments.second[i] + (1.0 - cfg.beta2) * g * g;
        moments.first[i] = m;
        moments.second[i] = v;
        let m_hat = m / correct1;
        let v_hat = v / correct2;
        params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    Ok(())
}

/// Adam over a fixed list of parameter tensors.
#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    moments: Vec<AdamMoments>,
    step: u64,
}

impl Adam {
    pub fn new(params: &[Tensor], cfg: AdamConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            moments: params
                .iter()
                .map(|p| AdamMoments::zeros(p.numel()))
                .collect(),
            step: 0,
        })
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies accumulated gradients, then clears them. Parameters without a
    /// gradient are treated as having a zero gradient.
    pub fn step(&mut self, params: &[Tensor]) -> Result<()> {
        if params.len() != self.moments.len() {
            return Err(ModelError::LengthMismatch {
                what: "adam parameter list",
                left: params.len(),
                right: self.moments.len(),
            });
        }
        self.step += 1;
        for (p, m) in params.iter().zip(&mut self.moments) {
            let grad = p.grad().unwrap_or_else(|| vec![0.0; p.numel()]);
            adam_step(&mut p.data_mut(), &grad, m, self.step, &self.cfg)?;
            p.zero_grad();
        }
        Ok(())
    }
}
