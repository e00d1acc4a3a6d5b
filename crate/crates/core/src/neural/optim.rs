use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use super::NeuralError;

/// Clamp applied to predictions before taking logs.
pub const BCE_EPS: f64 = 1e-12;

/// `-(y ln p + (1 - y) ln(1 - p))` with `p` clamped to `[eps, 1 - eps]`.
pub fn binary_cross_entropy(prediction: f64, label: f64) -> f64 {
    let p = prediction.clamp(BCE_EPS, 1.0 - BCE_EPS);
    -(label * p.ln() + (1.0 - label) * (1.0 - p).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub clip_norm: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip_norm: 5.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

pub fn global_norm(grads: &[Tensor]) -> f64 {
    grads.iter().map(Tensor::sum_squares).sum::<f64>().sqrt()
}

/// Rescales `grads` in place so their global L2 norm is at most
/// `clip_norm`. Returns the factor applied.
pub fn clip_by_global_norm(grads: &mut [Tensor], clip_norm: f64) -> f64 {
    let norm = global_norm(grads);
    if norm <= clip_norm || norm == 0.0 {
        return 1.0;
    }
    let scale = clip_norm / norm;
    grads.iter_mut().for_each(|g| g.scale(scale));
    scale
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &[&Tensor]) -> AdamState {
        AdamState {
            config,
            step: 0,
            first: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            second: params.iter().map(|p| vec![0.0; p.len()]).collect(),
        }
    }

    /// Clips `grads` to the configured global norm, then applies one
    /// bias-corrected Adam update.
    pub fn update(&mut self, params: &mut [&mut Tensor], mut grads: Vec<Tensor>) -> Result<(), NeuralError> {
        if params.len() != grads.len() || params.len() != self.first.len() {
            return Err(NeuralError::ShapeMismatch {
                expected: vec![self.first.len()],
                found: vec![grads.len()],
            });
        }
        for (p, g) in params.iter().zip(&grads) {
            if p.shape() != g.shape() {
                return Err(NeuralError::ShapeMismatch {
                    expected: p.shape().to_vec(),
                    found: g.shape().to_vec(),
                });
            }
            if !g.is_finite() {
                return Err(NeuralError::NonFiniteGradient);
            }
        }
        clip_by_global_norm(&mut grads, self.config.clip_norm);
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            ..
        } = self.config;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(&grads)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            for (((w, gi), mi), vi) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                *mi = beta1 * *mi + (1.0 - beta1) * gi;
                *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *w -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}
