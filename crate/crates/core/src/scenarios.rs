//! Data sources: the demodulation channel, a synthetic modulation
//! classification corpus, and RSS time series (CSV ingestion, AR(1) and
//! regime-switching generators).

use std::f64::consts::{FRAC_PI_4, PI};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learners::LabeledExample;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("SNR must be positive, got {0}")]
    InvalidSnr(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown modulation `{0}`")]
    UnknownModulation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("line {line}: index {got} does not exceed previous index {prev}")]
    NonMonotone { line: u64, prev: i64, got: i64 },
    #[error("corpus: {0}")]
    Corpus(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub const EPSILON_MAX: f64 = 0.15;
pub const DELTA_MAX_DEG: f64 = 15.0;

/// Random channel parameters shared by every example of one dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    /// Phase rotation in `[0, 2 pi)`.
    pub psi: f64,
    /// Amplitude imbalance in `[0, 0.15]`.
    pub epsilon: f64,
    /// Phase imbalance in radians, `[0, 15 deg]`.
    pub delta: f64,
}

impl ChannelState {
    pub const IDEAL: Self = Self {
        psi: 0.0,
        epsilon: 0.0,
        delta: 0.0,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
}

impl Constellation {
    /// Scales `points` to unit average energy.
    pub fn normalized(points: Vec<Complex64>) -> Self {
        let energy = points.iter().map(Complex64::norm_sqr).sum::<f64>() / points.len() as f64;
        let scale = energy.sqrt().recip();
        Self {
            points: points.into_iter().map(|p| p * scale).collect(),
        }
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(Complex64::norm_sqr).sum::<f64>() / self.points.len() as f64
    }
}

fn ring(count: usize, radius: f64, offset: f64) -> impl Iterator<Item = Complex64> {
    (0..count).map(move |k| Complex64::from_polar(radius, offset + k as f64 * 2.0 * PI / count as f64))
}

/// 4+4 APSK: inner ring at phases `pi/4 + k pi/2`, outer ring (twice the
/// radius) at `k pi/2`, normalized to unit average energy.
pub fn apsk8_constellation() -> Constellation {
    Constellation::normalized(ring(4, 1.0, FRAC_PI_4).chain(ring(4, 2.0, 0.0)).collect())
}

/// Beta(5, 2) as the 5th smallest of 6 uniforms.
pub fn sample_beta_5_2<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let mut u: [f64; 6] = std::array::from_fn(|_| rng.random::<f64>());
    u.sort_by(f64::total_cmp);
    u[4]
}

pub fn sample_channel_state<R: Rng + ?Sized>(rng: &mut R) -> ChannelState {
    let psi = rng.random::<f64>() * 2.0 * PI;
    let epsilon = EPSILON_MAX * sample_beta_5_2(rng);
    let delta = DELTA_MAX_DEG.to_radians() * sample_beta_5_2(rng);
    ChannelState {
        psi,
        epsilon,
        delta,
    }
}

/// `diag(1+eps, 1-eps) [[cos d, -sin d], [-sin d, cos d]] (y_I, y_Q)`.
pub fn iq_imbalance(symbol: Complex64, epsilon: f64, delta: f64) -> Complex64 {
    let (s, c) = delta.sin_cos();
    Complex64::new(
        (1.0 + epsilon) * (c * symbol.re - s * symbol.im),
        (1.0 - epsilon) * (-s * symbol.re + c * symbol.im),
    )
}

fn noise_dist(snr: f64) -> Result<Normal<f64>, ScenarioError> {
    if !(snr > 0.0) {
        return Err(ScenarioError::InvalidSnr(snr));
    }
    // infinite SNR gives a zero-variance (noiseless) channel
    Normal::new(0.0, (0.5 / snr).sqrt()).map_err(|_| ScenarioError::InvalidSnr(snr))
}

fn distort(symbol: Complex64, state: &ChannelState) -> Complex64 {
    Complex64::from_polar(1.0, state.psi) * iq_imbalance(symbol, state.epsilon, state.delta)
}

/// `e^{j psi} f_IQ(symbol) + v` with `v ~ CN(0, 1/snr)`; `snr` is linear.
pub fn channel_output<R: Rng + ?Sized>(
    symbol: Complex64,
    state: &ChannelState,
    snr: f64,
    rng: &mut R,
) -> Result<Complex64, ScenarioError> {
    let noise = noise_dist(snr)?;
    Ok(distort(symbol, state) + Complex64::new(noise.sample(rng), noise.sample(rng)))
}

/// `n` 8-APSK examples through a common channel; features are `(Re x, Im x)`.
pub fn gen_demod_dataset<R: Rng + ?Sized>(
    state: &ChannelState,
    snr: f64,
    n: usize,
    rng: &mut R,
) -> Result<Vec<LabeledExample>, ScenarioError> {
    if n == 0 {
        return Err(ScenarioError::InvalidConfig("dataset size must be >= 1".into()));
    }
    let noise = noise_dist(snr)?;
    let constellation = apsk8_constellation();
    Ok((0..n)
        .map(|_| {
            let label = rng.random_range(0..constellation.len());
            let x = distort(constellation.points()[label], state)
                + Complex64::new(noise.sample(rng), noise.sample(rng));
            LabeledExample::new(vec![x.re, x.im], label)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Modulation {
    Bpsk,
    Qpsk,
    Psk8,
    Qam16,
}

impl Modulation {
    pub const DEFAULT_SET: [Modulation; 4] = [Self::Bpsk, Self::Qpsk, Self::Psk8, Self::Qam16];

    pub fn name(self) -> &'static str {
        match self {
            Self::Bpsk => "BPSK",
            Self::Qpsk => "QPSK",
            Self::Psk8 => "8PSK",
            Self::Qam16 => "16QAM",
        }
    }

    pub fn constellation(self) -> Constellation {
        match self {
            Self::Bpsk => Constellation::normalized(ring(2, 1.0, 0.0).collect()),
            Self::Qpsk => Constellation::normalized(ring(4, 1.0, FRAC_PI_4).collect()),
            Self::Psk8 => Constellation::normalized(ring(8, 1.0, 0.0).collect()),
            Self::Qam16 => {
                let levels = [-3.0, -1.0, 1.0, 3.0];
                Constellation::normalized(
                    levels
                        .iter()
                        .flat_map(|&i| levels.iter().map(move |&q| Complex64::new(i, q)))
                        .collect(),
                )
            }
        }
    }
}

impl FromStr for Modulation {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::DEFAULT_SET
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ScenarioError::UnknownModulation(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModclassConfig {
    pub modulations: Vec<String>,
    /// Symbols per example; features are `2 * seq_len` reals.
    pub seq_len: usize,
    /// Linear SNR.
    pub snr: f64,
    pub num_examples: usize,
}

impl Default for ModclassConfig {
    fn default() -> Self {
        Self {
            modulations: Modulation::DEFAULT_SET.iter().map(|m| m.name().to_string()).collect(),
            seq_len: 16,
            snr: 10f64.powf(0.5),
            num_examples: 100,
        }
    }
}

impl ModclassConfig {
    pub fn parse_modulations(&self) -> Result<Vec<Modulation>, ScenarioError> {
        if self.modulations.is_empty() {
            return Err(ScenarioError::InvalidConfig("no modulations listed".into()));
        }
        self.modulations.iter().map(|m| m.parse()).collect()
    }
}

/// One modulation sequence through the channel, flattened as `I_1, Q_1, ..`.
pub fn modulated_sequence<R: Rng + ?Sized>(
    modulation: Modulation,
    len: usize,
    state: &ChannelState,
    snr: f64,
    rng: &mut R,
) -> Result<Vec<f64>, ScenarioError> {
    let noise = noise_dist(snr)?;
    let points = modulation.constellation();
    let mut out = Vec::with_capacity(2 * len);
    for _ in 0..len {
        let sym = points.points()[rng.random_range(0..points.len())];
        let x = distort(sym, state) + Complex64::new(noise.sample(rng), noise.sample(rng));
        out.push(x.re);
        out.push(x.im);
    }
    Ok(out)
}

/// Stratified modulation-classification dataset under one shared channel
/// state: labels cycle through the modulations, then the order is shuffled.
pub fn gen_modclass_dataset<R: Rng + ?Sized>(
    config: &ModclassConfig,
    state: &ChannelState,
    rng: &mut R,
) -> Result<Vec<LabeledExample>, ScenarioError> {
    let mods = config.parse_modulations()?;
    if config.seq_len == 0 || config.num_examples == 0 {
        return Err(ScenarioError::InvalidConfig(
            "sequence length and example count must be positive".into(),
        ));
    }
    let mut labels: Vec<usize> = (0..config.num_examples).map(|i| i % mods.len()).collect();
    labels.shuffle(rng);
    labels
        .into_iter()
        .map(|label| {
            let x = modulated_sequence(mods[label], config.seq_len, state, config.snr, rng)?;
            Ok(LabeledExample::new(x, label))
        })
        .collect()
}

/// Sidecar describing a raw `<name>.f32` corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusMeta {
    pub num_examples: usize,
    pub example_len: usize,
    pub labels: Vec<usize>,
    pub label_names: Vec<String>,
}

/// Labeled examples plus label names.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub examples: Vec<LabeledExample>,
    pub label_names: Vec<String>,
}

fn corpus_paths(dir: &Path, name: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{name}.f32")), dir.join(format!("{name}.json")))
}

/// Write `<dir>/<name>.f32` (little-endian f32 rows) and `<dir>/<name>.json`.
pub fn write_corpus(dir: &Path, name: &str, corpus: &Corpus) -> Result<(), ScenarioError> {
    let example_len = corpus.examples.first().map_or(0, |e| e.x.len());
    if corpus.examples.iter().any(|e| e.x.len() != example_len) {
        return Err(ScenarioError::Corpus("examples differ in length".into()));
    }
    let (data_path, meta_path) = corpus_paths(dir, name);
    let mut bytes = Vec::with_capacity(corpus.examples.len() * example_len * 4);
    for v in corpus.examples.iter().flat_map(|e| &e.x) {
        bytes.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    let meta = CorpusMeta {
        num_examples: corpus.examples.len(),
        example_len,
        labels: corpus.examples.iter().map(|e| e.y).collect(),
        label_names: corpus.label_names.clone(),
    };
    fs::write(&data_path, bytes).map_err(io_err(&data_path))?;
    let json = serde_json::to_vec_pretty(&meta).map_err(|e| ScenarioError::Corpus(e.to_string()))?;
    fs::write(&meta_path, json).map_err(io_err(&meta_path))
}

pub fn load_corpus(dir: &Path, name: &str) -> Result<Corpus, ScenarioError> {
    let (data_path, meta_path) = corpus_paths(dir, name);
    let meta: CorpusMeta = serde_json::from_slice(&fs::read(&meta_path).map_err(io_err(&meta_path))?)
        .map_err(|e| ScenarioError::Corpus(format!("{}: {e}", meta_path.display())))?;
    let bytes = fs::read(&data_path).map_err(io_err(&data_path))?;
    let expected = meta.num_examples * meta.example_len * 4;
    if bytes.len() != expected {
        return Err(ScenarioError::Corpus(format!(
            "{}: {} bytes, sidecar implies {expected}",
            data_path.display(),
            bytes.len()
        )));
    }
    if meta.labels.len() != meta.num_examples {
        return Err(ScenarioError::Corpus("label count differs from num_examples".into()));
    }
    if let Some(&bad) = meta.labels.iter().find(|&&l| l >= meta.label_names.len()) {
        return Err(ScenarioError::Corpus(format!("label {bad} has no name")));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect();
    let examples = meta
        .labels
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            LabeledExample::new(values[i * meta.example_len..(i + 1) * meta.example_len].to_vec(), y)
        })
        .collect();
    Ok(Corpus {
        examples,
        label_names: meta.label_names,
    })
}

/// One received-signal-strength sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RssRecord {
    pub index: i64,
    pub channel_id: Option<u32>,
    pub rss: f64,
}

/// Parse an `index,channel_id,rss` CSV (the `channel_id` column is optional).
pub fn load_rss_csv(path: &Path) -> Result<Vec<RssRecord>, ScenarioError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    parse_rss(file)
}

pub fn parse_rss<R: std::io::Read>(input: R) -> Result<Vec<RssRecord>, ScenarioError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header_err = |reason: String| ScenarioError::Malformed { line: 1, reason };
    let headers = reader
        .headers()
        .map_err(|e| header_err(e.to_string()))?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let index_col = column("index").ok_or_else(|| header_err("missing `index` column".into()))?;
    let rss_col = column("rss").ok_or_else(|| header_err("missing `rss` column".into()))?;
    let channel_col = column("channel_id");

    let mut out: Vec<RssRecord> = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| ScenarioError::Malformed {
            line: e.position().map_or(0, csv::Position::line),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, csv::Position::line);
        let malformed = |reason: String| ScenarioError::Malformed { line, reason };
        let field = |col: usize| record.get(col).unwrap_or("");
        let index: i64 = field(index_col)
            .parse()
            .map_err(|_| malformed(format!("bad index `{}`", field(index_col))))?;
        let rss: f64 = field(rss_col)
            .parse()
            .map_err(|_| malformed(format!("bad rss `{}`", field(rss_col))))?;
        if !rss.is_finite() {
            return Err(malformed(format!("non-finite rss `{}`", field(rss_col))));
        }
        let channel_id = match channel_col.map(field) {
            None | Some("") => None,
            Some(s) => Some(s.parse().map_err(|_| malformed(format!("bad channel_id `{s}`")))?),
        };
        if let Some(prev) = out.last() {
            if index <= prev.index {
                return Err(ScenarioError::NonMonotone {
                    line,
                    prev: prev.index,
                    got: index,
                });
            }
        }
        out.push(RssRecord {
            index,
            channel_id,
            rss,
        });
    }
    Ok(out)
}

pub fn write_rss_csv(path: &Path, records: &[RssRecord]) -> Result<(), ScenarioError> {
    let mut text = String::from("index,channel_id,rss\n");
    for r in records {
        let ch = r.channel_id.map(|c| c.to_string()).unwrap_or_default();
        text.push_str(&format!("{},{ch},{}\n", r.index, r.rss));
    }
    fs::write(path, text).map_err(io_err(path))
}

/// Online series: `x` is the one-hot channel id (empty when no record has
/// one) and `y` the RSS value. Optionally standardized to zero mean, unit
/// variance.
pub fn rss_to_series(records: &[RssRecord], standardize: bool) -> Vec<LabeledExample<f64>> {
    let channels = records
        .iter()
        .filter_map(|r| r.channel_id)
        .max()
        .map_or(0, |m| m as usize + 1);
    let (mean, scale) = if standardize && records.len() > 1 {
        let n = records.len() as f64;
        let mean = records.iter().map(|r| r.rss).sum::<f64>() / n;
        let var = records.iter().map(|r| (r.rss - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, if var > 0.0 { var.sqrt() } else { 1.0 })
    } else {
        (0.0, 1.0)
    };
    records
        .iter()
        .map(|r| {
            let mut x = vec![0.0; channels];
            if let Some(c) = r.channel_id {
                x[c as usize] = 1.0;
            }
            LabeledExample::new(x, (r.rss - mean) / scale)
        })
        .collect()
}

/// Scalar series with no exogenous input.
pub fn series_without_inputs(values: &[f64]) -> Vec<LabeledExample<f64>> {
    values.iter().map(|&y| LabeledExample::new(Vec::new(), y)).collect()
}

/// `y[i] = mean + rho (y[i-1] - mean) + sigma e[i]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Ar1Config {
    pub mean: f64,
    pub rho: f64,
    pub sigma: f64,
    pub length: usize,
    /// Initial value; drawn from the stationary law when absent.
    pub start: Option<f64>,
}

impl Default for Ar1Config {
    fn default() -> Self {
        Self {
            mean: 0.0,
            rho: 0.8,
            sigma: 1.0,
            length: 20_000,
            start: None,
        }
    }
}

impl Ar1Config {
    fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.rho.abs() < 1.0) {
            return Err(ScenarioError::InvalidConfig(format!(
                "AR(1) coefficient {} must satisfy |rho| < 1",
                self.rho
            )));
        }
        if !(self.sigma >= 0.0) || !self.mean.is_finite() {
            return Err(ScenarioError::InvalidConfig("sigma must be >= 0".into()));
        }
        Ok(())
    }

    pub fn stationary_variance(&self) -> f64 {
        self.sigma * self.sigma / (1.0 - self.rho * self.rho)
    }
}

pub fn synth_rss<R: Rng + ?Sized>(config: &Ar1Config, rng: &mut R) -> Result<Vec<f64>, ScenarioError> {
    config.validate()?;
    let mut y = match config.start {
        Some(s) => s,
        None => {
            let z: f64 = StandardNormal.sample(rng);
            config.mean + config.stationary_variance().sqrt() * z
        }
    };
    let mut out = Vec::with_capacity(config.length);
    for i in 0..config.length {
        if i > 0 {
            let z: f64 = StandardNormal.sample(rng);
            y = config.mean + config.rho * (y - config.mean) + config.sigma * z;
        }
        out.push(y);
    }
    Ok(out)
}

/// Concatenated AR(1) segments; each segment continues from the previous
/// value, so only the dynamics change at a boundary.
pub fn synth_regimes<R: Rng + ?Sized>(
    regimes: &[Ar1Config],
    rng: &mut R,
) -> Result<Vec<f64>, ScenarioError> {
    let mut out: Vec<f64> = Vec::new();
    for regime in regimes {
        let cfg = Ar1Config {
            start: out.last().map(|&last| {
                let z: f64 = StandardNormal.sample(rng);
                regime.mean + regime.rho * (last - regime.mean) + regime.sigma * z
            }),
            ..*regime
        };
        out.extend(synth_rss(&cfg, rng)?);
    }
    Ok(out)
}

/// Distribution-shifted test series of total length `length`.
///
/// * `volatility-burst`: noise level jumps 4x for the middle third.
/// * `level-jumps`: the mean moves by several stationary deviations every
///   2000 steps.
/// * `volatility-ramp`: noise level doubles each quarter.
/// * `volatility-surge`: noise level doubles over eleven equal segments.
pub fn shifted_test_series(length: usize) -> Vec<(&'static str, Vec<Ar1Config>)> {
    let seg = |mean: f64, sigma: f64, len: usize| Ar1Config {
        mean,
        rho: 0.8,
        sigma,
        length: len,
        start: None,
    };
    let third = length / 3;
    let quarter = length / 4;
    let jumps = length.div_ceil(2000);
    vec![
        (
            "volatility-burst",
            vec![seg(0.0, 0.5, third), seg(0.0, 2.0, third), seg(0.0, 0.5, length - 2 * third)],
        ),
        (
            "level-jumps",
            (0..jumps)
                .map(|j| {
                    let len = 2000.min(length - j * 2000);
                    seg(if j % 2 == 0 { 0.0 } else { 8.0 }, 1.0, len)
                })
                .collect(),
        ),
        (
            "volatility-ramp",
            (0..4)
                .map(|q| {
                    let len = if q == 3 { length - 3 * quarter } else { quarter };
                    seg(0.0, 0.25 * f64::from(1 << q), len)
                })
                .collect(),
        ),
        (
            "volatility-surge",
            (0..SURGE_SEGMENTS)
                .map(|j| {
                    let len = length / SURGE_SEGMENTS;
                    let len = if j + 1 == SURGE_SEGMENTS { length - j * len } else { len };
                    seg(0.0, 0.1 * f64::from(1 << j), len)
                })
                .collect(),
        ),
    ]
}

const SURGE_SEGMENTS: usize = 11;
