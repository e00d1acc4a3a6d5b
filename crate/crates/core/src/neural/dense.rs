use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::{mat_vec_t_acc, outer_acc, sigmoid, vec_mat_acc, Tensor};
use super::NeuralError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's output.
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `[in, out]`
    pub weights: Tensor,
    /// `[out]`
    pub bias: Tensor,
    pub activation: Activation,
}

pub struct DenseGrads {
    pub weights: Tensor,
    pub bias: Tensor,
}

impl DenseLayer {
    pub fn new<R: Rng>(inputs: usize, outputs: usize, activation: Activation, rng: &mut R) -> Self {
        DenseLayer {
            weights: Tensor::xavier(inputs, outputs, rng),
            bias: Tensor::zeros(&[outputs]),
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn outputs(&self) -> usize {
        self.weights.shape()[1]
    }

    /// `activation(input . W + b)` for a 1-D input or every row of a 2-D one.
    pub fn forward(&self, input: &Tensor) -> Result<Tensor, NeuralError> {
        if input.last_dim() != self.inputs() || input.is_empty() {
            return Err(NeuralError::ShapeMismatch {
                expected: vec![self.inputs()],
                found: input.shape().to_vec(),
            });
        }
        let rows = input.rows();
        let mut shape = input.shape().to_vec();
        *shape.last_mut().expect("non-empty shape") = self.outputs();
        let mut out = Tensor::zeros(&shape);
        for r in 0..rows {
            let y = out.row_mut(r);
            self.forward_into(input.row(r), y);
        }
        Ok(out)
    }

    pub(crate) fn forward_into(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(self.bias.data());
        vec_mat_acc(x, self.weights.data(), y);
        for v in y.iter_mut() {
            *v = self.activation.apply(*v);
        }
    }

    pub(crate) fn forward_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.outputs()];
        self.forward_into(x, &mut y);
        y
    }

    /// Accumulates gradients for one example given the layer's input, its
    /// output and the gradient with respect to the output. Returns the
    /// gradient with respect to the input.
    pub(crate) fn backward_acc(
        &self,
        x: &[f64],
        y: &[f64],
        dy: &[f64],
        grads: &mut DenseGrads,
    ) -> Vec<f64> {
        let dz: Vec<f64> = y
            .iter()
            .zip(dy)
            .map(|(yv, g)| g * self.activation.derivative_from_output(*yv))
            .collect();
        self.backward_pre_activation(x, &dz, grads)
    }

    /// Same as [`backward_acc`](Self::backward_acc) but with the gradient
    /// already taken through the activation.
    pub(crate) fn backward_pre_activation(&self, x: &[f64], dz: &[f64], grads: &mut DenseGrads) -> Vec<f64> {
        outer_acc(x, dz, grads.weights.data_mut());
        for (b, g) in grads.bias.data_mut().iter_mut().zip(dz) {
            *b += g;
        }
        let mut dx = vec![0.0; x.len()];
        mat_vec_t_acc(self.weights.data(), dz, &mut dx);
        dx
    }

    pub(crate) fn zero_grads(&self) -> DenseGrads {
        DenseGrads {
            weights: self.weights.zeros_like(),
            bias: self.bias.zeros_like(),
        }
    }
}
