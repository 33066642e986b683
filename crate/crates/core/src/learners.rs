//! Frequentist (gradient descent) and Bayesian (Langevin Monte Carlo)
//! training, and the predictive distribution shared by every set predictor.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffcore::{
    loss_and_grad, mlp_forward, softmax, Architecture, Batch, DiffError, LossHead, NetworkParams,
    Objective, Targets,
};
use crate::rng::{derive_rng, StreamRng};

const STREAM_INIT: u64 = 1;
const STREAM_NOISE: u64 = 2;

/// Input features paired with a target: a label index for classification,
/// a real value for regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample<T = usize> {
    pub x: Vec<f64>,
    pub y: T,
}

impl<T> LabeledExample<T> {
    pub fn new(x: Vec<f64>, y: T) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("training set is empty")]
    EmptyDataset,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("example {index}: {reason}")]
    BadExample { index: usize, reason: String },
    #[error(transparent)]
    Diff(#[from] DiffError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LangevinConfig {
    /// `T`; the injected noise has variance `2 eta / T`. `f64::INFINITY`
    /// switches the noise off.
    pub temperature: f64,
    /// `R`: number of retained snapshots.
    pub ensemble_size: usize,
    /// `R_min`: discarded initial iterations.
    pub burn_in: usize,
}

impl Default for LangevinConfig {
    fn default() -> Self {
        Self {
            temperature: 20.0,
            ensemble_size: 20,
            burn_in: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Full-batch GD steps for frequentist training.
    pub iterations: usize,
    pub langevin: LangevinConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.2,
            iterations: 120,
            langevin: LangevinConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        let bad = |m: &str| Err(LearnError::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive and finite");
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        if !(self.langevin.temperature > 0.0) {
            return bad("temperature must be positive");
        }
        if self.langevin.ensemble_size == 0 {
            return bad("ensemble size must be at least 1");
        }
        Ok(())
    }
}

/// A trained probabilistic classifier.
#[derive(Debug, Clone, PartialEq)]
pub enum Predictor {
    Frequentist(NetworkParams),
    /// Equally weighted ensemble (R >= 1 members, identical architectures).
    Bayesian(Vec<NetworkParams>),
}

/// Anything exposing a predictive distribution over a finite label set.
pub trait ProbabilisticClassifier {
    fn num_labels(&self) -> usize;

    fn input_dim(&self) -> usize;

    fn predict_distribution(&self, x: &[f64]) -> Result<Vec<f64>, DiffError>;

    /// Distributions for many inputs (row-major, `rows x input_dim`).
    fn predict_batch(&self, xs: &[f64], rows: usize) -> Result<Vec<Vec<f64>>, DiffError> {
        let d = self.input_dim();
        (0..rows)
            .map(|r| self.predict_distribution(&xs[r * d..(r + 1) * d]))
            .collect()
    }
}

impl Predictor {
    pub fn members(&self) -> &[NetworkParams] {
        match self {
            Predictor::Frequentist(p) => std::slice::from_ref(p),
            Predictor::Bayesian(ps) => ps,
        }
    }

    pub fn is_bayesian(&self) -> bool {
        matches!(self, Predictor::Bayesian(_))
    }

    /// `u64` member count followed by each member's parameter blob.
    pub fn to_bytes(&self) -> Vec<u8> {
        let members = self.members();
        let mut out = (members.len() as u64).to_le_bytes().to_vec();
        for m in members {
            out.extend(m.to_bytes());
        }
        out
    }

    /// Inverse of [`Predictor::to_bytes`]. A single member decodes as
    /// frequentist; the predictive distribution is the same either way.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DiffError> {
        let count = bytes
            .get(..8)
            .map(|b| u64::from_le_bytes(b.try_into().unwrap()) as usize)
            .ok_or_else(|| DiffError::Decode("truncated member count".into()))?;
        if count == 0 {
            return Err(DiffError::Decode("predictor without members".into()));
        }
        let mut offset = 8;
        let mut members = Vec::with_capacity(count);
        for _ in 0..count {
            let (p, used) = NetworkParams::read_prefix(&bytes[offset..])?;
            if members
                .first()
                .is_some_and(|m: &NetworkParams| m.arch() != p.arch())
            {
                return Err(DiffError::Decode("members disagree on architecture".into()));
            }
            members.push(p);
            offset += used;
        }
        if offset != bytes.len() {
            return Err(DiffError::Decode("trailing bytes after predictor".into()));
        }
        Ok(if count == 1 {
            Predictor::Frequentist(members.pop().unwrap())
        } else {
            Predictor::Bayesian(members)
        })
    }
}

impl ProbabilisticClassifier for Predictor {
    fn num_labels(&self) -> usize {
        self.members()[0].arch().output_dim()
    }

    fn input_dim(&self) -> usize {
        self.members()[0].arch().input_dim()
    }

    fn predict_distribution(&self, x: &[f64]) -> Result<Vec<f64>, DiffError> {
        Ok(self.predict_batch(x, 1)?.pop().unwrap())
    }

    fn predict_batch(&self, xs: &[f64], rows: usize) -> Result<Vec<Vec<f64>>, DiffError> {
        let members = self.members();
        let width = self.num_labels();
        let mut acc = vec![vec![0.0; width]; rows];
        for m in members {
            let layers = m.arch().layers().len();
            let tape = mlp_forward(m, 0..layers, xs.to_vec(), rows)?;
            for (a, logits) in acc.iter_mut().zip(tape.output().chunks_exact(width)) {
                for (ai, p) in a.iter_mut().zip(softmax(logits)) {
                    *ai += p;
                }
            }
        }
        if members.len() > 1 {
            let inv = 1.0 / members.len() as f64;
            acc.iter_mut().flatten().for_each(|v| *v *= inv);
        }
        Ok(acc)
    }
}

/// Index and value of the largest probability; ties go to the lowest index.
pub fn argmax_confidence(dist: &[f64]) -> (usize, f64) {
    dist.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &p)| {
            if p > best.1 {
                (i, p)
            } else {
                best
            }
        })
}

/// Hard decision and self-reported confidence.
pub fn hard_prediction<P: ProbabilisticClassifier + ?Sized>(
    predictor: &P,
    x: &[f64],
) -> Result<(usize, f64), DiffError> {
    Ok(argmax_confidence(&predictor.predict_distribution(x)?))
}

/// Row-major design matrix in a canonical order (sorted by label, then by
/// feature bit patterns), so that training depends on the dataset only as a
/// multiset.
fn canonical_design<T: Copy>(
    dataset: &[LabeledExample<T>],
    input_dim: usize,
    cmp_target: impl Fn(&T, &T) -> std::cmp::Ordering,
) -> Result<(Vec<f64>, Vec<T>), LearnError> {
    if dataset.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    if let Some(index) = dataset.iter().position(|e| e.x.len() != input_dim) {
        return Err(LearnError::BadExample {
            index,
            reason: format!(
                "feature width {} != {}",
                dataset[index].x.len(),
                input_dim
            ),
        });
    }
    let mut order: Vec<&LabeledExample<T>> = dataset.iter().collect();
    order.sort_by(|a, b| {
        cmp_target(&a.y, &b.y).then_with(|| {
            a.x.iter()
                .zip(&b.x)
                .map(|(u, v)| u.total_cmp(v))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let xs = order.iter().flat_map(|e| e.x.iter().copied()).collect();
    let ys = order.iter().map(|e| e.y).collect();
    Ok((xs, ys))
}

fn check_labels(labels: &[usize], classes: usize) -> Result<(), LearnError> {
    match labels.iter().position(|&l| l >= classes) {
        Some(index) => Err(LearnError::BadExample {
            index,
            reason: format!("label {} >= {classes}", labels[index]),
        }),
        None => Ok(()),
    }
}

fn init_params(arch: &Architecture, seed: u64) -> NetworkParams {
    let mut rng = derive_rng(seed, [STREAM_INIT, 0, 0, 0]);
    NetworkParams::init(arch, &mut rng)
}

/// Full-batch GD on the mean cross-entropy. Also returns the training loss
/// evaluated before each step.
pub fn train_frequentist_traced(
    arch: &Architecture,
    dataset: &[LabeledExample],
    config: &TrainConfig,
) -> Result<(Predictor, Vec<f64>), LearnError> {
    config.validate()?;
    let (xs, ys) = canonical_design(dataset, arch.input_dim(), Ord::cmp)?;
    check_labels(&ys, arch.output_dim())?;
    let batch = Batch::new(&xs, ys.len(), Targets::Labels(&ys));
    let objective = Objective::new(LossHead::CrossEntropy);
    let mut params = init_params(arch, config.seed);
    let mut trace = Vec::with_capacity(config.iterations);
    for _ in 0..config.iterations {
        let (value, g) = loss_and_grad(&params, &objective, &batch)?;
        trace.push(value);
        params.axpy(-config.learning_rate, &g);
    }
    Ok((Predictor::Frequentist(params), trace))
}

/// Full-batch GD on the mean cross-entropy for `config.iterations` steps.
pub fn train_frequentist(
    arch: &Architecture,
    dataset: &[LabeledExample],
    config: &TrainConfig,
) -> Result<Predictor, LearnError> {
    train_frequentist_traced(arch, dataset, config).map(|(p, _)| p)
}

/// Per-coordinate Gaussian perturbation with variance `2 eta / T`.
#[derive(Debug, Clone, Copy)]
pub struct LangevinNoise {
    std: f64,
}

impl LangevinNoise {
    pub fn new(learning_rate: f64, temperature: f64) -> Self {
        Self {
            std: (2.0 * learning_rate / temperature).sqrt(),
        }
    }

    pub fn variance(&self) -> f64 {
        self.std * self.std
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.std * z
    }

    pub fn perturb<R: Rng + ?Sized>(&self, params: &mut NetworkParams, rng: &mut R) {
        if self.std == 0.0 {
            return;
        }
        for v in params.values_mut() {
            *v += self.sample(rng);
        }
    }
}

/// Langevin Monte Carlo: `R_min + R` noisy GD steps on
/// `mean CE + (1/N) * ||phi||^2 / 2` (standard Gaussian prior), keeping the
/// last `R` iterates as an ensemble.
pub fn train_langevin(
    arch: &Architecture,
    dataset: &[LabeledExample],
    config: &TrainConfig,
) -> Result<Predictor, LearnError> {
    config.validate()?;
    let (xs, ys) = canonical_design(dataset, arch.input_dim(), Ord::cmp)?;
    check_labels(&ys, arch.output_dim())?;
    let n = ys.len();
    let batch = Batch::new(&xs, n, Targets::Labels(&ys));
    let objective = Objective::new(LossHead::CrossEntropy).with_weight_decay(1.0 / n as f64);
    let lc = config.langevin;
    let noise = LangevinNoise::new(config.learning_rate, lc.temperature);
    let mut noise_rng: StreamRng = derive_rng(config.seed, [STREAM_NOISE, 0, 0, 0]);
    let mut params = init_params(arch, config.seed);
    let mut ensemble = Vec::with_capacity(lc.ensemble_size);
    for step in 0..lc.burn_in + lc.ensemble_size {
        let (_, g) = loss_and_grad(&params, &objective, &batch)?;
        params.axpy(-config.learning_rate, &g);
        noise.perturb(&mut params, &mut noise_rng);
        if !params.is_finite() {
            return Err(DiffError::NonFinite {
                layer: params.arch().layers().len() - 1,
            }
            .into());
        }
        if step >= lc.burn_in {
            ensemble.push(params.clone());
        }
    }
    Ok(Predictor::Bayesian(ensemble))
}

/// Full-batch GD on the mean pinball loss at level `q` (scalar-output net).
pub fn train_quantile(
    arch: &Architecture,
    dataset: &[LabeledExample<f64>],
    q: f64,
    config: &TrainConfig,
) -> Result<NetworkParams, LearnError> {
    config.validate()?;
    let (xs, ys) = canonical_design(dataset, arch.input_dim(), |a: &f64, b: &f64| a.total_cmp(b))?;
    let batch = Batch::new(&xs, ys.len(), Targets::Values(&ys));
    let objective = Objective::new(LossHead::Pinball { q });
    let mut params = init_params(arch, config.seed);
    for _ in 0..config.iterations {
        let (_, g) = loss_and_grad(&params, &objective, &batch)?;
        params.axpy(-config.learning_rate, &g);
    }
    Ok(params)
}

/// Scalar regression model backed by a feed-forward network.
pub trait QuantileRegressor {
    fn predict(&self, x: &[f64]) -> Result<f64, DiffError>;
}

impl QuantileRegressor for NetworkParams {
    fn predict(&self, x: &[f64]) -> Result<f64, DiffError> {
        let layers = self.arch().layers().len();
        let tape = mlp_forward(self, 0..layers, x.to_vec(), 1)?;
        Ok(tape.output()[0])
    }
}
