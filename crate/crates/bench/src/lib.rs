//! Shared fixtures for the benchmarks.

use cpwire::diffcore::{Activation, Architecture};
use cpwire::harness::{draw_trial_data, ExperimentConfig};
use cpwire::LabeledExample;

/// The demodulation classifier: 2 -> 10 -> 30 -> 30 -> 8.
pub fn demod_arch() -> Architecture {
    Architecture::mlp(&[2, 10, 30, 30, 8], Activation::Relu, Activation::Identity)
}

/// One default demodulation trial at training size `n`.
pub fn demod_data(n: usize) -> (Vec<LabeledExample>, Vec<LabeledExample>) {
    draw_trial_data(&ExperimentConfig::default(), n, 0).expect("default config is valid")
}
