use serde::{Deserialize, Serialize};

use super::{Matrix, Parameter};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment accumulators for one ordered parameter list.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub optimizer: Optimizer,
    pub step: u64,
    pub first: Vec<Matrix>,
    pub second: Vec<Matrix>,
}

impl OptimizerState {
    pub fn new(optimizer: Optimizer) -> Self {
        Self {
            optimizer,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    /// Applies one update and zeroes the gradients. Any non-finite gradient
    /// aborts the step before a single value is modified.
    pub fn step(&mut self, params: &mut [&mut Parameter], lr: f64) -> Result<()> {
        if let Some(p) = params.iter().find(|p| !p.grad.is_finite()) {
            return Err(Error::NonFiniteGradient {
                param: p.name.clone(),
            });
        }
        match self.optimizer {
            Optimizer::Sgd => {
                for p in params.iter_mut() {
                    let Parameter { value, grad, .. } = &mut **p;
                    for (w, g) in value.data_mut().iter_mut().zip(grad.data()) {
                        *w -= lr * g;
                    }
                }
            }
            Optimizer::Adam { beta1, beta2, eps } => {
                if self.first.is_empty() {
                    self.first = params
                        .iter()
                        .map(|p| Matrix::zeros(p.value.rows(), p.value.cols()))
                        .collect();
                    self.second = self.first.clone();
                }
                if self.first.len() != params.len()
                    || self.first.iter().zip(params.iter()).any(|(m, p)| m.shape() != p.shape())
                {
                    return Err(Error::Config(
                        "optimizer state does not match the parameter list".into(),
                    ));
                }
                self.step += 1;
                let t = self.step as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for ((p, m), v) in params.iter_mut().zip(&mut self.first).zip(&mut self.second) {
                    let Parameter { value, grad, .. } = &mut **p;
                    for (((w, g), m), v) in value
                        .data_mut()
                        .iter_mut()
                        .zip(grad.data())
                        .zip(m.data_mut())
                        .zip(v.data_mut())
                    {
                        *m = beta1 * *m + (1.0 - beta1) * g;
                        *v = beta2 * *v + (1.0 - beta2) * g * g;
                        *w -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                    }
                }
            }
        }
        for p in params.iter_mut() {
            p.zero_grad();
        }
        Ok(())
    }
}

/// Rescales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm(params: &mut [&mut Parameter], max_norm: f64) -> f64 {
    let norm = params
        .iter()
        .map(|p| p.grad.sum_squares())
        .sum::<f64>()
        .sqrt();
    if norm > max_norm && norm > 0.0 {
        let factor = max_norm / norm;
        for p in params.iter_mut() {
            p.grad.scale(factor);
        }
    }
    norm
}
