use rand::Rng;

use super::tensor::{mat_vec_t_acc, outer_acc, vec_mat_acc, Tensor};
use super::NeuralError;

/// Additive attention over a sequence of states:
/// `u_t = tanh(s_t W + b)`, `e_t = u_t . v`, `a = softmax(e)`,
/// `context = sum_t a_t s_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionHead {
    /// `[D, A]`
    pub projection: Tensor,
    /// `[A]`
    pub bias: Tensor,
    /// `[A]`
    pub context: Tensor,
}

pub struct AttentionCache {
    projected: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl AttentionHead {
    pub fn new<R: Rng>(state: usize, attn: usize, rng: &mut R) -> AttentionHead {
        AttentionHead {
            projection: Tensor::xavier(state, attn, rng),
            bias: Tensor::zeros(&[attn]),
            context: Tensor::uniform(&[attn], (6.0 / (attn + 1) as f64).sqrt(), rng),
        }
    }

    pub fn state_size(&self) -> usize {
        self.projection.shape()[0]
    }

    pub fn params(&self) -> [&Tensor; 3] {
        [&self.projection, &self.bias, &self.context]
    }

    pub fn params_mut(&mut self) -> [&mut Tensor; 3] {
        [&mut self.projection, &mut self.bias, &mut self.context]
    }

    /// Returns the context vector and the attention weights.
    pub fn attend(&self, states: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>), NeuralError> {
        let (ctx, cache) = self.forward(states)?;
        Ok((ctx, cache.weights))
    }

    pub fn forward(&self, states: &[Vec<f64>]) -> Result<(Vec<f64>, AttentionCache), NeuralError> {
        if states.is_empty() {
            return Err(NeuralError::EmptySequence);
        }
        let d = self.state_size();
        let mut projected = Vec::with_capacity(states.len());
        let mut scores = Vec::with_capacity(states.len());
        for s in states {
            if s.len() != d {
                return Err(NeuralError::ShapeMismatch {
                    expected: vec![d],
                    found: vec![s.len()],
                });
            }
            let mut u = self.bias.data().to_vec();
            vec_mat_acc(s, self.projection.data(), &mut u);
            u.iter_mut().for_each(|x| *x = x.tanh());
            scores.push(u.iter().zip(self.context.data()).map(|(a, b)| a * b).sum::<f64>());
            projected.push(u);
        }
        let weights = softmax(&scores);
        let mut ctx = vec![0.0; d];
        for (w, s) in weights.iter().zip(states) {
            for (c, x) in ctx.iter_mut().zip(s) {
                *c += w * x;
            }
        }
        Ok((ctx, AttentionCache { projected, weights }))
    }

    /// Accumulates parameter gradients into `grads` (projection, bias,
    /// context) and returns the gradient on each state.
    pub fn backward(
        &self,
        states: &[Vec<f64>],
        cache: &AttentionCache,
        dctx: &[f64],
        grads: &mut [Tensor],
    ) -> Vec<Vec<f64>> {
        let a = &cache.weights;
        let da: Vec<f64> = states
            .iter()
            .map(|s| s.iter().zip(dctx).map(|(x, g)| x * g).sum())
            .collect();
        let weighted: f64 = a.iter().zip(&da).map(|(w, d)| w * d).sum();
        let mut dstates = Vec::with_capacity(states.len());
        for (t, s) in states.iter().enumerate() {
            let de = a[t] * (da[t] - weighted);
            let u = &cache.projected[t];
            for (g, uj) in grads[2].data_mut().iter_mut().zip(u) {
                *g += de * uj;
            }
            let dz: Vec<f64> = u
                .iter()
                .zip(self.context.data())
                .map(|(uj, vj)| de * vj * (1.0 - uj * uj))
                .collect();
            outer_acc(s, &dz, grads[0].data_mut());
            for (g, d) in grads[1].data_mut().iter_mut().zip(&dz) {
                *g += d;
            }
            let mut ds: Vec<f64> = dctx.iter().map(|g| a[t] * g).collect();
            mat_vec_t_acc(self.projection.data(), &dz, &mut ds);
            dstates.push(ds);
        }
        dstates
    }
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}
