//! Conformal set and interval predictors for wireless signal processing.
//!
//! * [`diffcore`]: small dense/LSTM networks with reverse-mode gradients.
//! * [`learners`]: full-batch gradient descent and Langevin Monte Carlo
//!   training, producing frequentist or ensemble predictors.
//! * [`conformal`]: naive, validation-based and cross-validation-based set
//!   predictors.
//! * [`online`]: rolling conformal inference for time series.
//! * [`scenarios`]: channel simulators, synthetic tasks and data loaders.
//! * [`harness`]: experiment drivers and metrics.

pub mod conformal;
pub mod diffcore;
pub mod harness;
pub mod learners;
pub mod online;
pub mod rng;
pub mod scenarios;

pub use conformal::{PredictionInterval, PredictionSet};
pub use learners::{LabeledExample, Predictor, TrainConfig};
