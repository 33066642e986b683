//! Dense and recurrent neural primitives with hand-written reverse-mode
//! gradients. All arithmetic is `f64`.

mod activation;
mod dense;
mod grad;
mod loss;
mod lstm;
mod network;
mod tensor;

use thiserror::Error;

pub use activation::{Activation, SELU_ALPHA, SELU_LAMBDA};
pub use dense::{dense_forward, mlp_backward, mlp_forward, MlpTape};
pub use grad::{grad, loss, loss_and_grad, max_relative_fd_error, Batch, LossHead, Objective, Targets};
pub use loss::{cross_entropy, pinball_grad_yhat, pinball_loss, softmax, PROB_FLOOR};
pub use lstm::{lstm_backward, lstm_cell, lstm_forward, LstmTape};
pub use network::{Architecture, LayerSpec, NetworkParams, PARAMS_FORMAT_VERSION};
pub use tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiffError {
    #[error("layer {layer}: expected input width {expected}, got {got}")]
    DimensionMismatch {
        layer: usize,
        expected: usize,
        got: usize,
    },
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("quantile level {0} outside [0, 1]")]
    InvalidQuantileLevel(f64),
    #[error("non-finite value in layer {layer}")]
    NonFinite { layer: usize },
    #[error("layer {layer} is not a {expected} layer")]
    WrongLayerKind { layer: usize, expected: &'static str },
    #[error("loss head mismatch: {0}")]
    HeadMismatch(&'static str),
    #[error("empty batch")]
    EmptyBatch,
    #[error("cannot decode parameters: {0}")]
    Decode(String),
}

impl DiffError {
    pub(crate) fn at_layer(self, layer: usize) -> Self {
        match self {
            DiffError::DimensionMismatch { expected, got, .. } => DiffError::DimensionMismatch {
                layer,
                expected,
                got,
            },
            DiffError::NonFinite { .. } => DiffError::NonFinite { layer },
            other => other,
        }
    }
}
