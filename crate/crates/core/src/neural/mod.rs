//! A small deterministic float64 network toolkit: dense, GRU and attention
//! layers with hand-written backward passes, binary cross-entropy, Adam with
//! global-norm clipping, and a finite-difference gradient checker.

mod attention;
mod dense;
mod gru;
mod mlp;
mod optim;
mod serialize;
mod tensor;

pub use attention::{softmax, AttentionCache, AttentionHead};
pub use dense::{Activation, DenseGrads, DenseLayer};
pub use gru::{BiGru, BiGruCache, GruCell};
pub use mlp::{Mlp, MlpSpec, MlpTraining};
pub use optim::{
    binary_cross_entropy, clip_by_global_norm, global_norm, AdamConfig, AdamState, BCE_EPS,
};
pub use serialize::{read_params, write_params, ModelHeader};
pub use tensor::{sigmoid, Tensor};

#[derive(Debug, thiserror::Error)]
pub enum NeuralError {
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("sequence is empty")]
    EmptySequence,
    #[error("gradient contains a non-finite value")]
    NonFiniteGradient,
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A model whose trainable tensors can be enumerated in a fixed order.
pub trait Parameterized {
    fn params(&self) -> Vec<&Tensor>;
    fn params_mut(&mut self) -> Vec<&mut Tensor>;
}

/// A model with a scalar training loss and its analytic gradient.
pub trait Differentiable: Parameterized {
    type Batch: ?Sized;

    fn loss(&self, batch: &Self::Batch) -> f64;

    /// Loss plus one gradient tensor per parameter, in `params()` order.
    fn loss_and_grad(&self, batch: &Self::Batch) -> (f64, Vec<Tensor>);
}

/// Central-difference step used by [`check_gradients`].
pub const FD_STEP: f64 = 1e-5;

/// Gradients smaller than this in both routes are compared absolutely
/// rather than relatively.
pub const GRAD_CHECK_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_relative_error: f64,
    pub max_absolute_error: f64,
    pub checked: usize,
}

impl GradCheck {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_relative_error < tolerance
    }
}

/// Compares the analytic gradient against central finite differences with
/// step `h` on every scalar parameter. The model is restored afterwards.
pub fn check_gradients<M: Differentiable>(model: &mut M, batch: &M::Batch, h: f64) -> GradCheck {
    let (_, analytic) = model.loss_and_grad(batch);
    let mut report = GradCheck {
        max_relative_error: 0.0,
        max_absolute_error: 0.0,
        checked: 0,
    };
    let counts: Vec<usize> = model.params().iter().map(|p| p.len()).collect();
    for (pi, n) in counts.into_iter().enumerate() {
        for i in 0..n {
            let original = model.params()[pi].data()[i];
            model.params_mut()[pi].data_mut()[i] = original + h;
            let plus = model.loss(batch);
            model.params_mut()[pi].data_mut()[i] = original - h;
            let minus = model.loss(batch);
            model.params_mut()[pi].data_mut()[i] = original;

            let numeric = (plus - minus) / (2.0 * h);
            let exact = analytic[pi].data()[i];
            let abs = (numeric - exact).abs();
            let rel = abs / numeric.abs().max(exact.abs()).max(GRAD_CHECK_FLOOR);
            report.max_absolute_error = report.max_absolute_error.max(abs);
            report.max_relative_error = report.max_relative_error.max(rel);
            report.checked += 1;
        }
    }
    report
}
