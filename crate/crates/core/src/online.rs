//! Rolling conformal inference (RCI) for scalar time series.
//!
//! Two quantile networks (levels `alpha/2` and `1 - alpha/2`) read a sliding
//! window of the last `K` observed pairs plus the current input, and are
//! updated by one pinball-loss gradient step per arrival. A calibration
//! parameter `theta` widens or shrinks their interval through the stretching
//! function and is driven by the observed miscoverage.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conformal::PredictionInterval;
use crate::diffcore::{
    lstm_backward, lstm_forward, mlp_backward, mlp_forward, pinball_grad_yhat, Activation,
    Architecture, DiffError, LayerSpec, LstmTape, MlpTape, NetworkParams,
};
use crate::learners::LabeledExample;
use crate::rng::derive_rng;

#[derive(Debug, Error)]
pub enum OnlineError {
    #[error("parameters do not match the quantile network descriptor")]
    DescriptorMismatch,
    #[error("input has width {got}, expected {expected}")]
    InputWidth { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Diff(#[from] DiffError),
}

/// `sign(theta) * (exp(|theta|) - 1)`.
pub fn stretching(theta: f64) -> f64 {
    theta.signum() * theta.abs().exp_m1()
}

/// Shape of a windowed quantile network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuantileNetSpec {
    /// Width of the exogenous input `x` (0 when the series has none).
    pub x_dim: usize,
    /// Number of past pairs fed to the recurrent part.
    pub window: usize,
    pub pre_hidden: Vec<usize>,
    pub lstm_hidden: usize,
    pub lstm_layers: usize,
    pub post_hidden: Vec<usize>,
}

impl Default for QuantileNetSpec {
    fn default() -> Self {
        Self {
            x_dim: 0,
            window: 20,
            pre_hidden: vec![16, 32],
            lstm_hidden: 32,
            lstm_layers: 2,
            post_hidden: vec![32],
        }
    }
}

impl QuantileNetSpec {
    pub fn with_x_dim(mut self, x_dim: usize) -> Self {
        self.x_dim = x_dim;
        self
    }

    /// Layer order: pre-MLP (pair -> scalar), stacked LSTM, post-MLP
    /// (`[x, h_K^1, .., h_K^L]` -> scalar). Hidden dense layers use ReLU.
    pub fn architecture(&self) -> Architecture {
        let mut layers = Vec::new();
        let push_mlp = |layers: &mut Vec<LayerSpec>, input: usize, hidden: &[usize]| {
            let mut width = input;
            for &h in hidden {
                layers.push(LayerSpec::Dense {
                    inputs: width,
                    outputs: h,
                    activation: Activation::Relu,
                });
                width = h;
            }
            layers.push(LayerSpec::Dense {
                inputs: width,
                outputs: 1,
                activation: Activation::Identity,
            });
        };
        push_mlp(&mut layers, self.x_dim + 1, &self.pre_hidden);
        for l in 0..self.lstm_layers {
            layers.push(LayerSpec::Lstm {
                inputs: if l == 0 { 1 } else { self.lstm_hidden },
                hidden: self.lstm_hidden,
            });
        }
        push_mlp(
            &mut layers,
            self.x_dim + self.lstm_layers * self.lstm_hidden,
            &self.post_hidden,
        );
        Architecture::new(layers)
    }

    fn pre_range(&self) -> std::ops::Range<usize> {
        0..self.pre_hidden.len() + 1
    }

    fn lstm_range(&self) -> std::ops::Range<usize> {
        let start = self.pre_range().end;
        start..start + self.lstm_layers
    }

    fn post_range(&self) -> std::ops::Range<usize> {
        let start = self.lstm_range().end;
        start..start + self.post_hidden.len() + 1
    }

    fn validate(&self) -> Result<(), OnlineError> {
        if self.window == 0 || self.lstm_layers == 0 || self.lstm_hidden == 0 {
            return Err(OnlineError::InvalidConfig(
                "window, LSTM depth and width must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Bounded FIFO of the most recent `(x, y)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    capacity: usize,
    x_dim: usize,
    pairs: VecDeque<(Vec<f64>, f64)>,
}

impl History {
    pub fn new(capacity: usize, x_dim: usize) -> Self {
        Self {
            capacity,
            x_dim,
            pairs: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, x: Vec<f64>, y: f64) {
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((x, y));
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Window as `capacity` rows of `[x, y]`, oldest first, front-padded
    /// with zero pairs while fewer than `capacity` pairs exist.
    pub fn padded_rows(&self) -> Vec<f64> {
        let width = self.x_dim + 1;
        let mut rows = vec![0.0; self.capacity * width];
        let offset = self.capacity - self.pairs.len();
        for (i, (x, y)) in self.pairs.iter().enumerate() {
            let row = &mut rows[(offset + i) * width..(offset + i + 1) * width];
            row[..self.x_dim].copy_from_slice(x);
            row[self.x_dim] = *y;
        }
        rows
    }
}

/// A windowed quantile network: descriptor plus parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileNet {
    spec: QuantileNetSpec,
    params: NetworkParams,
}

struct NetTape {
    pre: MlpTape,
    lstm: Vec<LstmTape>,
    post: MlpTape,
}

impl QuantileNet {
    pub fn new(spec: QuantileNetSpec, params: NetworkParams) -> Result<Self, OnlineError> {
        spec.validate()?;
        if params.arch() != &spec.architecture() {
            return Err(OnlineError::DescriptorMismatch);
        }
        Ok(Self { spec, params })
    }

    pub fn init(spec: QuantileNetSpec, seed: u64) -> Result<Self, OnlineError> {
        spec.validate()?;
        let mut rng = derive_rng(seed, [0; 4]);
        let params = NetworkParams::init(&spec.architecture(), &mut rng);
        Ok(Self { spec, params })
    }

    pub fn spec(&self) -> &QuantileNetSpec {
        &self.spec
    }

    pub fn params(&self) -> &NetworkParams {
        &self.params
    }

    /// Bias of the scalar output unit. Its gradient is the pinball
    /// subgradient itself, so its net drift over a run measures how far the
    /// realized miss rate strays from the target level.
    pub fn output_bias(&self) -> f64 {
        let last = self.params.arch().layers().len() - 1;
        self.params.layer_blocks(last)[1].values()[0]
    }

    fn check_inputs(&self, window_rows: &[f64], x: &[f64]) -> Result<(), OnlineError> {
        if x.len() != self.spec.x_dim {
            return Err(OnlineError::InputWidth {
                expected: self.spec.x_dim,
                got: x.len(),
            });
        }
        let expected = self.spec.window * (self.spec.x_dim + 1);
        if window_rows.len() != expected {
            return Err(OnlineError::InputWidth {
                expected,
                got: window_rows.len(),
            });
        }
        Ok(())
    }

    /// Per-slot pre-processed scalars `w_1..w_K`.
    pub fn preprocess(&self, window_rows: &[f64]) -> Result<Vec<f64>, OnlineError> {
        let tape = mlp_forward(
            &self.params,
            self.spec.pre_range(),
            window_rows.to_vec(),
            self.spec.window,
        )?;
        Ok(tape.output().to_vec())
    }

    fn forward_tape(&self, window_rows: &[f64], x: &[f64]) -> Result<NetTape, OnlineError> {
        self.check_inputs(window_rows, x)?;
        let k = self.spec.window;
        let pre = mlp_forward(&self.params, self.spec.pre_range(), window_rows.to_vec(), k)?;
        let mut lstm: Vec<LstmTape> = Vec::with_capacity(self.spec.lstm_layers);
        let mut seq = pre.output().to_vec();
        for layer in self.spec.lstm_range() {
            let tape = lstm_forward(&self.params, layer, seq, k)?;
            seq = tape.outputs().to_vec();
            lstm.push(tape);
        }
        let mut post_in = x.to_vec();
        for tape in &lstm {
            post_in.extend_from_slice(tape.last_hidden());
        }
        let post = mlp_forward(&self.params, self.spec.post_range(), post_in, 1)?;
        Ok(NetTape { pre, lstm, post })
    }

    /// Quantile estimate for input `x` given the padded window rows.
    pub fn forward(&self, window_rows: &[f64], x: &[f64]) -> Result<f64, OnlineError> {
        Ok(self.forward_tape(window_rows, x)?.post.output()[0])
    }

    /// Gradient of `scale * yhat` w.r.t. every parameter.
    fn backward(&self, tape: &NetTape, scale: f64) -> Result<NetworkParams, OnlineError> {
        let spec = &self.spec;
        let (k, h) = (spec.window, spec.lstm_hidden);
        let mut grads = NetworkParams::zeros(self.params.arch());
        let d_post_in = mlp_backward(
            &self.params,
            spec.post_range(),
            &tape.post,
            vec![scale],
            &mut grads,
            true,
        )?;
        let mut d_seq = vec![0.0; k * h];
        for (pos, layer) in spec.lstm_range().enumerate().rev() {
            let d_last = &d_post_in[spec.x_dim + pos * h..spec.x_dim + (pos + 1) * h];
            for (acc, d) in d_seq[(k - 1) * h..].iter_mut().zip(d_last) {
                *acc += d;
            }
            d_seq = lstm_backward(&self.params, layer, &tape.lstm[pos], &d_seq, &mut grads)?;
        }
        mlp_backward(&self.params, spec.pre_range(), &tape.pre, d_seq, &mut grads, false)?;
        Ok(grads)
    }

    /// Gradient of the quantile output itself.
    pub fn output_gradient(&self, window_rows: &[f64], x: &[f64]) -> Result<NetworkParams, OnlineError> {
        let tape = self.forward_tape(window_rows, x)?;
        self.backward(&tape, 1.0)
    }

    /// One SGD step on the pinball loss at level `q`; returns the pre-step output.
    fn pinball_step(
        &mut self,
        tape: &NetTape,
        q: f64,
        y: f64,
        learning_rate: f64,
    ) -> Result<f64, OnlineError> {
        let yhat = tape.post.output()[0];
        let g = self.backward(tape, pinball_grad_yhat(q, y, yhat))?;
        self.params.axpy(-learning_rate, &g);
        Ok(yhat)
    }
}

/// `(x, h_K)` forward convenience matching the network descriptor.
pub fn quantile_net_forward(
    net: &QuantileNet,
    history: &History,
    x: &[f64],
) -> Result<f64, OnlineError> {
    net.forward(&history.padded_rows(), x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RciConfig {
    pub alpha: f64,
    /// Calibration learning rate; 0 disables calibration (plain NQB).
    pub gamma: f64,
    /// Model learning rate.
    pub eta: f64,
    pub net: QuantileNetSpec,
    pub seed: u64,
}

impl Default for RciConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.03,
            eta: 0.01,
            net: QuantileNetSpec::default(),
            seed: 0,
        }
    }
}

impl RciConfig {
    fn validate(&self) -> Result<(), OnlineError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(OnlineError::InvalidConfig(format!(
                "alpha {} outside (0, 1)",
                self.alpha
            )));
        }
        if !(self.gamma >= 0.0 && self.eta > 0.0) {
            return Err(OnlineError::InvalidConfig(
                "gamma must be >= 0 and eta > 0".into(),
            ));
        }
        self.net.validate()
    }
}

/// Lower/upper quantile networks with their shared observation window.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantilePair {
    pub lo: QuantileNet,
    pub hi: QuantileNet,
    pub history: History,
    alpha: f64,
    eta: f64,
}

/// Outcome of feeding one observation to a [`QuantilePair`].
#[derive(Debug, Clone, Copy)]
pub struct PairStep {
    /// Uncorrected quantile estimates before the update.
    pub lo: f64,
    pub hi: f64,
}

impl QuantilePair {
    pub fn new(config: &RciConfig) -> Result<Self, OnlineError> {
        config.validate()?;
        Ok(Self {
            lo: QuantileNet::init(config.net.clone(), derive_rng_seed(config.seed, 1))?,
            hi: QuantileNet::init(config.net.clone(), derive_rng_seed(config.seed, 2))?,
            history: History::new(config.net.window, config.net.x_dim),
            alpha: config.alpha,
            eta: config.eta,
        })
    }

    /// Uncorrected `(lo, hi)` estimates for `x`.
    pub fn estimate(&self, x: &[f64]) -> Result<(f64, f64), OnlineError> {
        let rows = self.history.padded_rows();
        Ok((self.lo.forward(&rows, x)?, self.hi.forward(&rows, x)?))
    }

    /// Predict, then take one pinball step per model on `(x, y)` and push the
    /// pair into the window.
    pub fn observe(&mut self, x: &[f64], y: f64) -> Result<PairStep, OnlineError> {
        let rows = self.history.padded_rows();
        let tape_lo = self.lo.forward_tape(&rows, x)?;
        let tape_hi = self.hi.forward_tape(&rows, x)?;
        let lo = self.lo.pinball_step(&tape_lo, self.alpha / 2.0, y, self.eta)?;
        let hi = self.hi.pinball_step(&tape_hi, 1.0 - self.alpha / 2.0, y, self.eta)?;
        self.history.push(x.to_vec(), y);
        Ok(PairStep { lo, hi })
    }
}

fn derive_rng_seed(seed: u64, which: u64) -> u64 {
    use rand::Rng;
    derive_rng(seed, [which, 0, 0, 0]).random()
}

/// Interval `[lo - s(theta), hi + s(theta)]`.
pub fn calibrated_interval(lo: f64, hi: f64, theta: f64) -> PredictionInterval {
    let s = stretching(theta);
    PredictionInterval::new(lo - s, hi + s)
}

/// Complete RCI state.
#[derive(Debug, Clone, PartialEq)]
pub struct RciState {
    pub theta: f64,
    pub models: QuantilePair,
    /// Number of observations processed so far.
    pub time: usize,
    alpha: f64,
    gamma: f64,
}

/// One step of an online run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RciRecord {
    pub i: usize,
    pub lo: f64,
    pub hi: f64,
    pub y: f64,
    pub err: u8,
    /// Calibration parameter used for this step's interval.
    pub theta: f64,
}

impl RciRecord {
    pub fn interval(&self) -> PredictionInterval {
        PredictionInterval::new(self.lo, self.hi)
    }
}

impl RciState {
    /// Fresh state with `theta = 0` and seeded networks.
    pub fn new(config: &RciConfig) -> Result<Self, OnlineError> {
        Ok(Self {
            theta: 0.0,
            models: QuantilePair::new(config)?,
            time: 0,
            alpha: config.alpha,
            gamma: config.gamma,
        })
    }

    /// Advance by one observation, returning the record of this step.
    pub fn step(&mut self, x: &[f64], y: f64) -> Result<RciRecord, OnlineError> {
        let est = self.models.observe(x, y)?;
        let interval = calibrated_interval(est.lo, est.hi, self.theta);
        let err = u8::from(!interval.contains(y));
        let record = RciRecord {
            i: self.time,
            lo: interval.lo,
            hi: interval.hi,
            y,
            err,
            theta: self.theta,
        };
        self.theta += self.gamma * (f64::from(err) - self.alpha);
        self.time += 1;
        Ok(record)
    }
}

/// Interval issued for `x` in the current state.
pub fn rci_predict(state: &RciState, x: &[f64]) -> Result<PredictionInterval, OnlineError> {
    let (lo, hi) = state.models.estimate(x)?;
    Ok(calibrated_interval(lo, hi, state.theta))
}

/// State after observing `(x, y)`: theta moves by `gamma (err - alpha)`, both
/// models take one pinball step, and the pair enters the window.
pub fn rci_update(mut state: RciState, x: &[f64], y: f64) -> Result<RciState, OnlineError> {
    state.step(x, y)?;
    Ok(state)
}

/// Run RCI over a whole series.
pub fn run_rci(
    series: &[LabeledExample<f64>],
    config: &RciConfig,
) -> Result<Vec<RciRecord>, OnlineError> {
    Ok(run_rci_multi(series, config, &[config.gamma])?
        .pop()
        .unwrap_or_default())
}

/// Run one model trajectory with several calibration tracks.
///
/// Model updates never read `theta`, so tracks with different `gamma`
/// share the networks; each returned record stream is identical to a
/// separate [`run_rci`] with that `gamma`.
pub fn run_rci_multi(
    series: &[LabeledExample<f64>],
    config: &RciConfig,
    gammas: &[f64],
) -> Result<Vec<Vec<RciRecord>>, OnlineError> {
    config.validate()?;
    if let Some(g) = gammas.iter().find(|g| !(**g >= 0.0)) {
        return Err(OnlineError::InvalidConfig(format!("gamma {g} must be >= 0")));
    }
    let mut models = QuantilePair::new(config)?;
    let mut thetas = vec![0.0; gammas.len()];
    let mut records: Vec<Vec<RciRecord>> = vec![Vec::with_capacity(series.len()); gammas.len()];
    for (i, obs) in series.iter().enumerate() {
        let est = models.observe(&obs.x, obs.y)?;
        for ((theta, &gamma), out) in thetas.iter_mut().zip(gammas).zip(records.iter_mut()) {
            let interval = calibrated_interval(est.lo, est.hi, *theta);
            let err = u8::from(!interval.contains(obs.y));
            out.push(RciRecord {
                i,
                lo: interval.lo,
                hi: interval.hi,
                y: obs.y,
                err,
                theta: *theta,
            });
            *theta += gamma * (f64::from(err) - config.alpha);
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> QuantileNetSpec {
        QuantileNetSpec {
            x_dim: 1,
            window: 4,
            pre_hidden: vec![3],
            lstm_hidden: 5,
            lstm_layers: 2,
            post_hidden: vec![4],
        }
    }

    #[test]
    fn stretching_values() {
        assert_eq!(stretching(0.0), 0.0);
        assert!((stretching(1.0) - (std::f64::consts::E - 1.0)).abs() < 1e-15);
        for t in [0.1, 0.7, 2.5, 9.0] {
            assert_eq!(stretching(-t), -stretching(t));
            assert!(stretching(t) > stretching(t * 0.9));
        }
    }

    #[test]
    fn default_architecture_shapes() {
        let spec = QuantileNetSpec::default();
        let arch = spec.architecture();
        let layers = arch.layers();
        assert_eq!(layers.len(), 3 + 2 + 2);
        assert_eq!(layers[3], LayerSpec::Lstm { inputs: 1, hidden: 32 });
        assert_eq!(layers[4], LayerSpec::Lstm { inputs: 32, hidden: 32 });
        assert_eq!(layers[5].inputs(), 64);
        assert_eq!(arch.output_dim(), 1);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let spec = small_spec();
        let net = QuantileNet::new(spec.clone(), NetworkParams::zeros(&spec.architecture())).unwrap();
        let mut hist = History::new(4, 1);
        hist.push(vec![1.0], 3.0);
        assert_eq!(quantile_net_forward(&net, &hist, &[0.5]).unwrap(), 0.0);
    }

    #[test]
    fn descriptor_mismatch_is_reported() {
        let params = NetworkParams::zeros(&small_spec().architecture());
        let mut other = small_spec();
        other.window = 5;
        other.lstm_hidden = 6;
        assert!(matches!(
            QuantileNet::new(other, params),
            Err(OnlineError::DescriptorMismatch)
        ));
    }

    #[test]
    fn history_pads_at_front_and_evicts_oldest() {
        let mut h = History::new(3, 1);
        h.push(vec![1.0], 10.0);
        assert_eq!(h.padded_rows(), vec![0.0, 0.0, 0.0, 0.0, 1.0, 10.0]);
        for i in 2..=4 {
            h.push(vec![i as f64], 10.0 * i as f64);
        }
        assert_eq!(h.len(), 3);
        assert_eq!(h.padded_rows(), vec![2.0, 20.0, 3.0, 30.0, 4.0, 40.0]);
    }

    #[test]
    fn slot_perturbation_changes_only_that_slot() {
        let net = QuantileNet::init(small_spec(), 3).unwrap();
        let rows: Vec<f64> = (0..8).map(|v| v as f64 * 0.3 - 1.0).collect();
        let base = net.preprocess(&rows).unwrap();
        for slot in 0..4 {
            let mut perturbed = rows.clone();
            perturbed[slot * 2 + 1] += 0.75;
            let w = net.preprocess(&perturbed).unwrap();
            for (k, (a, b)) in base.iter().zip(&w).enumerate() {
                if k != slot {
                    assert_eq!(a.to_bits(), b.to_bits(), "slot {slot} leaked into {k}");
                }
            }
        }
    }

    #[test]
    fn identical_windows_give_identical_outputs() {
        let net = QuantileNet::init(small_spec(), 9).unwrap();
        let rows: Vec<f64> = (0..8).map(|v| (v as f64).sin()).collect();
        let a = net.forward(&rows, &[0.2]).unwrap();
        let b = net.forward(&rows, &[0.2]).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(net.forward(&rows, &[0.2, 0.1]).is_err());
    }

    #[test]
    fn theta_update_arithmetic() {
        let config = RciConfig {
            net: small_spec(),
            ..RciConfig::default()
        };
        let mut state = RciState::new(&config).unwrap();
        state.theta = 0.5;
        // force a miss with a huge target
        let rec = state.step(&[0.0], 1e6).unwrap();
        assert_eq!(rec.err, 1);
        assert!((state.theta - 0.527).abs() < 1e-12);
        state.theta = 0.5;
        let (lo, hi) = state.models.estimate(&[0.0]).unwrap();
        let rec = state.step(&[0.0], 0.5 * (lo + hi)).unwrap();
        assert_eq!(rec.err, 0);
        assert!((state.theta - 0.497).abs() < 1e-12);
    }

    #[test]
    fn update_at_kink_takes_q_side_step() {
        let config = RciConfig {
            net: small_spec(),
            ..RciConfig::default()
        };
        let state = RciState::new(&config).unwrap();
        let x = [0.3];
        let rows = state.models.history.padded_rows();
        let y = state.models.lo.forward(&rows, &x).unwrap();
        let g = state.models.lo.output_gradient(&rows, &x).unwrap();
        let next = rci_update(state.clone(), &x, y).unwrap();
        // lo model at the kink: subgradient -q with q = alpha / 2
        let q = config.alpha / 2.0;
        let mut expected = state.models.lo.params().clone();
        expected.axpy(config.eta * q, &g);
        for (a, b) in next.models.lo.params().values().zip(expected.values()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(next.time, 1);
        assert_eq!(next.models.history.len(), 1);
    }

    #[test]
    fn predict_with_zero_theta_is_the_raw_interval() {
        let config = RciConfig {
            net: small_spec(),
            ..RciConfig::default()
        };
        let state = RciState::new(&config).unwrap();
        let (lo, hi) = state.models.estimate(&[1.0]).unwrap();
        let i = rci_predict(&state, &[1.0]).unwrap();
        assert_eq!((i.lo, i.hi), (lo, hi));
    }

    #[test]
    fn interval_widens_with_theta() {
        let a = calibrated_interval(-1.0, 1.0, 1.0);
        assert!((a.lo - (-1.0 - (std::f64::consts::E - 1.0))).abs() < 1e-15);
        assert!((a.hi - (1.0 + (std::f64::consts::E - 1.0))).abs() < 1e-15);
        let mut last = 0.0;
        for t in [0.0, 0.5, 1.0, 3.0, 6.0] {
            let w = calibrated_interval(-1.0, 1.0, t).size();
            assert!(w > last);
            last = w;
        }
        assert!(calibrated_interval(-1.0, 1.0, -2.0).empty);
    }

    #[test]
    fn theta_moves_by_exact_steps() {
        let config = RciConfig {
            net: small_spec(),
            ..RciConfig::default()
        };
        let series: Vec<LabeledExample<f64>> = (0..200)
            .map(|i| LabeledExample::new(vec![0.0], ((i * 7919) % 13) as f64 - 6.0))
            .collect();
        let recs = run_rci(&series, &config).unwrap();
        for w in recs.windows(2) {
            let expected = w[0].theta + config.gamma * (f64::from(w[0].err) - config.alpha);
            assert!((w[1].theta - expected).abs() < 1e-12);
        }
        assert_eq!(recs[0].theta, 0.0);
    }

    #[test]
    fn zero_gamma_freezes_theta_and_multi_matches_single() {
        let config = RciConfig {
            net: small_spec(),
            gamma: 0.0,
            ..RciConfig::default()
        };
        let series: Vec<LabeledExample<f64>> = (0..60)
            .map(|i| LabeledExample::new(vec![(i as f64).cos()], (i as f64 * 0.37).sin()))
            .collect();
        let single = run_rci(&series, &config).unwrap();
        assert!(single.iter().all(|r| r.theta == 0.0));
        let multi = run_rci_multi(&series, &config, &[0.03, 0.0]).unwrap();
        assert_eq!(multi[1], single);
        let with_gamma = run_rci(&series, &RciConfig { gamma: 0.03, ..config }).unwrap();
        assert_eq!(multi[0], with_gamma);
    }

    #[test]
    fn output_bias_tracks_miss_count() {
        // b_T - b_0 = -eta * sum(1{y < lo} - q) for the lower model
        let config = RciConfig {
            net: small_spec(),
            gamma: 0.0,
            ..RciConfig::default()
        };
        let series: Vec<LabeledExample<f64>> = (0..300)
            .map(|i| LabeledExample::new(vec![0.0], ((i * 37) % 11) as f64 * 0.4 - 2.0))
            .collect();
        let mut models = QuantilePair::new(&config).unwrap();
        let b0 = models.lo.output_bias();
        let mut below = 0.0;
        for obs in &series {
            let step = models.observe(&obs.x, obs.y).unwrap();
            below += f64::from(u8::from(obs.y < step.lo));
        }
        let q = config.alpha / 2.0;
        let predicted = -config.eta * (below - q * series.len() as f64);
        assert!((models.lo.output_bias() - b0 - predicted).abs() < 1e-9);
    }

    #[test]
    fn rci_step_matches_functional_api() {
        let config = RciConfig {
            net: small_spec(),
            ..RciConfig::default()
        };
        let series: Vec<LabeledExample<f64>> = (0..10)
            .map(|i| LabeledExample::new(vec![i as f64 * 0.1], (i as f64).sqrt()))
            .collect();
        let recs = run_rci(&series, &config).unwrap();
        let mut state = RciState::new(&config).unwrap();
        for (obs, rec) in series.iter().zip(&recs) {
            let issued = rci_predict(&state, &obs.x).unwrap();
            assert_eq!((issued.lo, issued.hi), (rec.lo, rec.hi));
            state = rci_update(state, &obs.x, obs.y).unwrap();
        }
    }
}
