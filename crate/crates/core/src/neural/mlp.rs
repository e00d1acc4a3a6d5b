use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dense::{Activation, DenseGrads, DenseLayer};
use super::optim::{binary_cross_entropy, AdamConfig, AdamState};
use super::tensor::Tensor;
use super::{Differentiable, NeuralError, Parameterized};

/// Fully-connected binary classifier: ReLU hidden layers and one sigmoid
/// output unit, with an optional L2 penalty on one layer's weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub inputs: usize,
    pub hidden: [usize; 2],
    pub l2: f64,
    /// Layer whose weights carry the penalty; 1 is the last hidden layer.
    pub l2_layer: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpTraining {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
}

impl Default for MlpTraining {
    fn default() -> Self {
        MlpTraining {
            epochs: 20,
            batch_size: 64,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub spec: MlpSpec,
    pub layers: Vec<DenseLayer>,
}

impl Mlp {
    pub fn new(spec: MlpSpec, seed: u64) -> Mlp {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let [h1, h2] = spec.hidden;
        Mlp {
            spec,
            layers: vec![
                DenseLayer::new(spec.inputs, h1, Activation::Relu, &mut rng),
                DenseLayer::new(h1, h2, Activation::Relu, &mut rng),
                DenseLayer::new(h2, 1, Activation::Sigmoid, &mut rng),
            ],
        }
    }

    pub fn predict_one(&self, x: &[f64]) -> f64 {
        let mut a = x.to_vec();
        for l in &self.layers {
            a = l.forward_vec(&a);
        }
        a[0]
    }

    /// Probabilities for every row of `x` (`[N, inputs]`).
    pub fn predict(&self, x: &Tensor) -> Result<Vec<f64>, NeuralError> {
        if x.last_dim() != self.spec.inputs {
            return Err(NeuralError::ShapeMismatch {
                expected: vec![self.spec.inputs],
                found: x.shape().to_vec(),
            });
        }
        Ok((0..x.rows()).map(|r| self.predict_one(x.row(r))).collect())
    }

    /// `lambda * sum(w^2)` over the designated layer's weights.
    pub fn l2_penalty(&self) -> f64 {
        self.spec.l2 * self.layers[self.spec.l2_layer].weights.sum_squares()
    }

    fn batch_loss(&self, x: &Tensor, y: &[f64], rows: &[usize]) -> f64 {
        let bce: f64 = rows
            .iter()
            .map(|&r| binary_cross_entropy(self.predict_one(x.row(r)), y[r]))
            .sum();
        bce / rows.len() as f64 + self.l2_penalty()
    }

    fn batch_grad(&self, x: &Tensor, y: &[f64], rows: &[usize]) -> (f64, Vec<Tensor>) {
        let mut grads: Vec<DenseGrads> = self.layers.iter().map(DenseLayer::zero_grads).collect();
        let scale = 1.0 / rows.len() as f64;
        let mut bce = 0.0;
        let n_layers = self.layers.len();
        for &r in rows {
            let mut acts = vec![x.row(r).to_vec()];
            for l in &self.layers {
                let next = l.forward_vec(acts.last().expect("input present"));
                acts.push(next);
            }
            let p = acts[n_layers][0];
            bce += binary_cross_entropy(p, y[r]);
            // sigmoid + cross-entropy: gradient at the logit is p - y
            let mut delta = self.layers[n_layers - 1].backward_pre_activation(
                &acts[n_layers - 1],
                &[(p - y[r]) * scale],
                &mut grads[n_layers - 1],
            );
            for li in (0..n_layers - 1).rev() {
                delta = self.layers[li].backward_acc(&acts[li], &acts[li + 1], &delta, &mut grads[li]);
            }
        }
        let l2 = self.spec.l2_layer;
        let w = self.layers[l2].weights.data();
        for (g, wi) in grads[l2].weights.data_mut().iter_mut().zip(w) {
            *g += 2.0 * self.spec.l2 * wi;
        }
        let loss = bce * scale + self.l2_penalty();
        let flat = grads.into_iter().flat_map(|g| [g.weights, g.bias]).collect();
        (loss, flat)
    }

    /// Minibatch Adam on binary cross-entropy. Returns the mean training
    /// loss of each epoch.
    pub fn fit(
        &mut self,
        x: &Tensor,
        y: &[f64],
        training: &MlpTraining,
        seed: u64,
    ) -> Result<Vec<f64>, NeuralError> {
        if x.last_dim() != self.spec.inputs || x.rows() != y.len() {
            return Err(NeuralError::ShapeMismatch {
                expected: vec![y.len(), self.spec.inputs],
                found: x.shape().to_vec(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut adam = AdamState::new(training.adam, &self.params());
        let mut order: Vec<usize> = (0..y.len()).collect();
        let mut history = Vec::with_capacity(training.epochs);
        for _ in 0..training.epochs {
            order.shuffle(&mut rng);
            let mut total = 0.0;
            for chunk in order.chunks(training.batch_size.max(1)) {
                let (loss, grads) = self.batch_grad(x, y, chunk);
                total += loss * chunk.len() as f64;
                adam.update(&mut self.params_mut(), grads)?;
            }
            history.push(total / y.len() as f64);
        }
        Ok(history)
    }
}

impl Parameterized for Mlp {
    fn params(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(|l| [&l.weights, &l.bias]).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weights, &mut l.bias])
            .collect()
    }
}

impl Differentiable for Mlp {
    /// Inputs `[N, inputs]` and 0/1 labels.
    type Batch = (Tensor, Vec<f64>);

    fn loss(&self, (x, y): &Self::Batch) -> f64 {
        let rows: Vec<usize> = (0..y.len()).collect();
        self.batch_loss(x, y, &rows)
    }

    fn loss_and_grad(&self, (x, y): &Self::Batch) -> (f64, Vec<Tensor>) {
        let rows: Vec<usize> = (0..y.len()).collect();
        self.batch_grad(x, y, &rows)
    }
}
