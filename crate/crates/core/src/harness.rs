//! Experiment orchestration: offline coverage/inefficiency sweeps, the online
//! RCI-versus-baseline comparison, reliability diagrams, and CSV/JSON output.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::conformal::{
    ConformalError, CpConfig, CrossConformal, CvAlphaMode, NaiveSetPredictor, PredictionSet,
    SetPredictor, ValidationConformal,
};
use crate::diffcore::{Activation, Architecture};
use crate::learners::{
    argmax_confidence, train_frequentist, train_langevin, LabeledExample, LearnError,
    ProbabilisticClassifier, Predictor, TrainConfig,
};
use crate::online::{run_rci_multi, OnlineError, RciConfig, RciRecord};
use crate::rng::derive_rng;
use crate::scenarios::{
    gen_demod_dataset, gen_modclass_dataset, load_corpus, sample_channel_state, ModclassConfig,
    ScenarioError,
};

pub const METRICS_CSV_VERSION: u32 = 1;
pub const ONLINE_CSV_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Conformal(#[from] ConformalError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Online(#[from] OnlineError),
}

impl HarnessError {
    /// Process exit code: 2 for configuration problems, 3 for bad input
    /// data, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_)
            | Self::Scenario(ScenarioError::InvalidConfig(_) | ScenarioError::InvalidSnr(_))
            | Self::Scenario(ScenarioError::UnknownModulation(_))
            | Self::Online(OnlineError::InvalidConfig(_))
            | Self::Learn(LearnError::InvalidConfig(_))
            | Self::Conformal(ConformalError::InvalidAlpha(_) | ConformalError::FoldsDoNotDivide { .. }) => 2,
            Self::Data(_) | Self::Scenario(_) => 3,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

macro_rules! named_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "lowercase")]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = HarnessError;

            fn from_str(s: &str) -> Result<Self, HarnessError> {
                Self::ALL
                    .iter()
                    .copied()
                    .find(|v| v.as_str().eq_ignore_ascii_case(s))
                    .ok_or_else(|| HarnessError::Config(format!(
                        "unknown {} `{s}`", stringify!($name).to_lowercase()
                    )))
            }
        }
    };
}

named_enum!(Scenario { Demod => "demod", Modclass => "modclass", Rss => "rss" });
named_enum!(
    /// Set predictor under evaluation.
    Method { Naive => "naive", Vb => "vb", Kcv => "kcv", Cv => "cv" }
);
named_enum!(Learner { Freq => "freq", Bayes => "bayes" });

/// Everything needed to reproduce an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub methods: Vec<Method>,
    pub learners: Vec<Learner>,
    pub alpha: f64,
    pub n_grid: Vec<usize>,
    pub n_test: usize,
    pub trials: usize,
    /// Folds for K-fold cross-validation CP.
    pub folds: usize,
    pub cv_alpha_mode: CvAlphaMode,
    /// Largest N for which the N-model CV-CP is run.
    pub max_cv_n: usize,
    /// Linear SNR (the CLI accepts dB).
    pub snr: f64,
    pub seed: u64,
    /// Hidden widths; defaults depend on the scenario.
    pub hidden: Option<Vec<usize>>,
    pub train: TrainConfig,
    pub modclass: ModclassConfig,
    /// Raw modulation corpus `(dir, name)`; synthetic data when absent.
    pub corpus: Option<(PathBuf, String)>,
    /// Record wall times. Off by default so reruns give identical bytes.
    pub timing: bool,
    pub online: OnlineConfig,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Demod,
            methods: vec![Method::Naive, Method::Vb, Method::Kcv, Method::Cv],
            learners: vec![Learner::Freq, Learner::Bayes],
            alpha: 0.1,
            n_grid: vec![20, 40, 60],
            n_test: 100,
            trials: 50,
            folds: 4,
            cv_alpha_mode: CvAlphaMode::default(),
            max_cv_n: 200,
            snr: db_to_linear(5.0),
            seed: 0,
            hidden: None,
            train: TrainConfig::default(),
            modclass: ModclassConfig::default(),
            corpus: None,
            timing: false,
            online: OnlineConfig::default(),
            output: None,
        }
    }
}

/// Online (RSS) experiment settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnlineConfig {
    pub rci: RciConfig,
    pub warmup: usize,
    /// RSS CSV; an AR(1) series is synthesized when absent.
    pub rss_path: Option<PathBuf>,
    pub ar1: crate::scenarios::Ar1Config,
    pub standardize: bool,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        Self {
            rci: RciConfig::default(),
            warmup: 1000,
            rss_path: None,
            ar1: crate::scenarios::Ar1Config::default(),
            standardize: false,
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_json(&fs::read_to_string(path).map_err(io_err(path))?)
    }

    pub fn cp(&self) -> CpConfig {
        CpConfig {
            alpha: self.alpha,
            folds: self.folds,
            cv_alpha_mode: self.cv_alpha_mode,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} outside (0, 1)", self.alpha));
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.n_test == 0 {
            return bad("n_test must be >= 1".into());
        }
        if !(self.snr > 0.0) {
            return bad(format!("SNR {} must be positive", self.snr));
        }
        if self.methods.is_empty() || self.learners.is_empty() {
            return bad("at least one method and one learner are required".into());
        }
        self.train.validate()?;
        for &n in &self.n_grid {
            if n < 2 {
                return bad(format!("N = {n} is too small"));
            }
            if self.methods.contains(&Method::Kcv) && (self.folds < 2 || n % self.folds != 0) {
                return bad(format!("{} folds do not divide N = {n}", self.folds));
            }
            if self.methods.contains(&Method::Cv) && n > self.max_cv_n {
                return bad(format!("N = {n} exceeds max_cv_n = {}", self.max_cv_n));
            }
        }
        if self.n_grid.is_empty() && self.scenario != Scenario::Rss {
            return bad("empty N grid".into());
        }
        Ok(())
    }

    fn num_labels(&self) -> Result<usize, HarnessError> {
        match self.scenario {
            Scenario::Demod => Ok(8),
            Scenario::Modclass => Ok(self.modclass.parse_modulations()?.len()),
            Scenario::Rss => Err(HarnessError::Config(
                "the rss scenario has no offline sweep".into(),
            )),
        }
    }

    /// Classifier architecture for the configured scenario.
    pub fn architecture(&self, input_dim: usize) -> Result<Architecture, HarnessError> {
        let (default_hidden, activation) = match self.scenario {
            Scenario::Modclass => (vec![64, 32], Activation::Selu),
            _ => (vec![10, 30, 30], Activation::Relu),
        };
        let mut sizes = vec![input_dim];
        sizes.extend(self.hidden.clone().unwrap_or(default_hidden));
        sizes.push(self.num_labels()?);
        Ok(Architecture::mlp(&sizes, activation, Activation::Identity))
    }
}

/// One line of the metrics CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub scenario: Scenario,
    pub method: Method,
    pub learner: Learner,
    pub n: usize,
    pub trial: usize,
    pub empirical_coverage: f64,
    pub empirical_inefficiency: f64,
    /// Seconds spent training and calibrating; 0 when timing is disabled.
    pub wall_time: f64,
    /// Digest of the trial's train and test data.
    pub data_hash: String,
}

/// Coverage and mean set size of `sets` against `labels`.
pub fn evaluate_sets(sets: &[PredictionSet], labels: &[usize]) -> Result<(f64, f64), HarnessError> {
    if sets.is_empty() || sets.len() != labels.len() {
        return Err(HarnessError::Data(format!(
            "{} sets for {} labels",
            sets.len(),
            labels.len()
        )));
    }
    let n = sets.len() as f64;
    let covered = sets.iter().zip(labels).filter(|(s, &y)| s.contains(y)).count() as f64;
    let size: usize = sets.iter().map(PredictionSet::len).sum();
    Ok((covered / n, size as f64 / n))
}

/// Evaluate any set predictor on a labelled test set.
pub fn evaluate_predictor<S: SetPredictor + ?Sized>(
    predictor: &S,
    test: &[LabeledExample],
) -> Result<(f64, f64), HarnessError> {
    let xs: Vec<f64> = test.iter().flat_map(|e| e.x.iter().copied()).collect();
    let labels: Vec<usize> = test.iter().map(|e| e.y).collect();
    let sets = predictor.predict_sets(&xs, test.len())?;
    evaluate_sets(&sets, &labels)
}

pub fn dataset_hash(examples: &[LabeledExample]) -> String {
    let mut hasher = Sha256::new();
    for e in examples {
        hasher.update((e.y as u64).to_le_bytes());
        for v in &e.x {
            hasher.update(v.to_le_bytes());
        }
    }
    hex::encode(&hasher.finalize()[..8])
}

// Stream slots; combined with (trial, N) they address independent RNG streams.
const SLOT_DATA: u64 = 0;
const SLOT_SPLIT: u64 = 1;
const SLOT_FOLDS: u64 = 2;
const SLOT_TRAIN: u64 = 3;

/// Seed for training a model used by `method`, fold `fold`. Learners share
/// seeds so that frequentist and Bayesian runs are paired.
fn train_seed(config: &ExperimentConfig, trial: usize, n: usize, method: Method, fold: usize) -> u64 {
    let sub = ((method as u64) << 32) | fold as u64;
    derive_rng(config.seed, [trial as u64, n as u64, SLOT_TRAIN, sub]).random()
}

/// Train and test sets for one `(trial, N)` cell.
pub fn draw_trial_data(
    config: &ExperimentConfig,
    n: usize,
    trial: usize,
) -> Result<(Vec<LabeledExample>, Vec<LabeledExample>), HarnessError> {
    let mut rng = derive_rng(config.seed, [trial as u64, n as u64, SLOT_DATA, 0]);
    let total = n + config.n_test;
    let mut data = match (config.scenario, &config.corpus) {
        (Scenario::Demod, _) => {
            let state = sample_channel_state(&mut rng);
            gen_demod_dataset(&state, config.snr, total, &mut rng)?
        }
        (Scenario::Modclass, None) => {
            let state = sample_channel_state(&mut rng);
            let mc = ModclassConfig {
                num_examples: total,
                snr: config.snr,
                ..config.modclass.clone()
            };
            gen_modclass_dataset(&mc, &state, &mut rng)?
        }
        (Scenario::Modclass, Some((dir, name))) => {
            let corpus = load_corpus(dir, name)?;
            if corpus.examples.len() < total {
                return Err(HarnessError::Data(format!(
                    "corpus has {} examples, trial needs {total}",
                    corpus.examples.len()
                )));
            }
            rand::seq::index::sample(&mut rng, corpus.examples.len(), total)
                .into_iter()
                .map(|i| corpus.examples[i].clone())
                .collect()
        }
        (Scenario::Rss, _) => {
            return Err(HarnessError::Config("the rss scenario has no offline sweep".into()))
        }
    };
    let test = data.split_off(n);
    Ok((data, test))
}

fn train(
    arch: &Architecture,
    learner: Learner,
    data: &[LabeledExample],
    base: &TrainConfig,
    seed: u64,
) -> Result<Predictor, ConformalError> {
    let config = base.with_seed(seed);
    Ok(match learner {
        Learner::Freq => train_frequentist(arch, data, &config)?,
        Learner::Bayes => train_langevin(arch, data, &config)?,
    })
}

/// All configured `(learner, method)` rows for one `(trial, N)` cell.
pub fn run_offline_trial(
    config: &ExperimentConfig,
    n: usize,
    trial: usize,
) -> Result<Vec<MetricsRow>, HarnessError> {
    let (train_set, test) = draw_trial_data(config, n, trial)?;
    let hash = {
        let mut all = train_set.clone();
        all.extend(test.iter().cloned());
        dataset_hash(&all)
    };
    let input_dim = train_set[0].x.len();
    let arch = config.architecture(input_dim)?;
    let alpha = config.alpha;
    let mut rows = Vec::new();
    for &learner in &config.learners {
        for &method in &config.methods {
            let start = Instant::now();
            let fit = |m: Method, fold: usize, data: &[LabeledExample]| {
                train(&arch, learner, data, &config.train, train_seed(config, trial, n, m, fold))
            };
            let (coverage, inefficiency) = match method {
                Method::Naive => {
                    let predictor = NaiveSetPredictor {
                        predictor: fit(method, 0, &train_set)?,
                        alpha,
                    };
                    evaluate_predictor(&predictor, &test)?
                }
                Method::Vb => {
                    let mut rng = derive_rng(config.seed, [trial as u64, n as u64, SLOT_SPLIT, 0]);
                    let predictor =
                        ValidationConformal::fit(&train_set, alpha, &mut rng, |d| fit(method, 0, d))?;
                    evaluate_predictor(&predictor, &test)?
                }
                Method::Kcv | Method::Cv => {
                    let k = if method == Method::Kcv { config.folds } else { n };
                    if method == Method::Cv && n > config.max_cv_n {
                        return Err(HarnessError::Config(format!(
                            "N = {n} exceeds max_cv_n = {}",
                            config.max_cv_n
                        )));
                    }
                    let mut rng =
                        derive_rng(config.seed, [trial as u64, n as u64, SLOT_FOLDS, method as u64]);
                    let predictor = CrossConformal::fit(
                        &train_set,
                        k,
                        alpha,
                        config.cv_alpha_mode,
                        &mut rng,
                        |d, fold| fit(method, fold, d),
                    )?;
                    evaluate_predictor(&predictor, &test)?
                }
            };
            rows.push(MetricsRow {
                scenario: config.scenario,
                method,
                learner,
                n,
                trial,
                empirical_coverage: coverage,
                empirical_inefficiency: inefficiency,
                wall_time: if config.timing {
                    start.elapsed().as_secs_f64()
                } else {
                    0.0
                },
                data_hash: hash.clone(),
            });
        }
    }
    Ok(rows)
}

/// Every `(N, trial)` cell of the grid, in grid order.
pub fn sweep_offline(config: &ExperimentConfig) -> Result<Vec<MetricsRow>, HarnessError> {
    sweep_offline_with(config, |_| {})
}

/// As [`sweep_offline`], calling `progress` after each finished trial.
pub fn sweep_offline_with<F: FnMut(&[MetricsRow])>(
    config: &ExperimentConfig,
    mut progress: F,
) -> Result<Vec<MetricsRow>, HarnessError> {
    config.validate()?;
    let mut rows = Vec::new();
    for &n in &config.n_grid {
        for trial in 0..config.trials {
            let trial_rows = run_offline_trial(config, n, trial)?;
            progress(&trial_rows);
            rows.extend(trial_rows);
        }
        log::info!("finished N = {n}");
    }
    Ok(rows)
}

/// Write `contents` next to `path` and rename into place.
fn write_atomically(path: &Path, contents: &[u8]) -> Result<(), HarnessError> {
    let tmp = path.with_extension("partial");
    let mut file = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    file.write_all(contents).map_err(io_err(&tmp))?;
    file.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn csv_bytes<T: Serialize>(comment: &str, rows: &[T], header: &[&str]) -> Result<Vec<u8>, HarnessError> {
    let mut out = format!("# {comment}\n").into_bytes();
    {
        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(&mut out);
        let encode = |e: csv::Error| HarnessError::Data(e.to_string());
        writer.write_record(header).map_err(encode)?;
        for row in rows {
            writer.serialize(row).map_err(encode)?;
        }
        writer.flush().map_err(|e| HarnessError::Data(e.to_string()))?;
    }
    Ok(out)
}

const METRICS_COLUMNS: [&str; 9] = [
    "scenario",
    "method",
    "learner",
    "n",
    "trial",
    "empirical_coverage",
    "empirical_inefficiency",
    "wall_time",
    "data_hash",
];

pub fn metrics_csv(rows: &[MetricsRow]) -> Result<Vec<u8>, HarnessError> {
    csv_bytes(
        &format!("cpwire-metrics v{METRICS_CSV_VERSION}: {}", METRICS_COLUMNS.join(",")),
        rows,
        &METRICS_COLUMNS,
    )
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<(), HarnessError> {
    write_atomically(path, &metrics_csv(rows)?)
}

/// Parse a metrics CSV written by [`write_metrics_csv`].
pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>, HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    csv::Reader::from_reader(body.as_bytes())
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))
}

/// Mean coverage and inefficiency of one summary group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub mean_coverage: f64,
    pub mean_inefficiency: f64,
}

/// Group key for offline summaries: `method/learner/N`.
pub fn summarize_offline(rows: &[MetricsRow]) -> BTreeMap<String, MethodSummary> {
    let mut groups: BTreeMap<String, (f64, f64, usize)> = BTreeMap::new();
    for r in rows {
        let entry = groups
            .entry(format!("{}/{}/{}", r.method, r.learner, r.n))
            .or_default();
        entry.0 += r.empirical_coverage;
        entry.1 += r.empirical_inefficiency;
        entry.2 += 1;
    }
    groups
        .into_iter()
        .map(|(k, (c, i, n))| {
            (
                k,
                MethodSummary {
                    mean_coverage: c / n as f64,
                    mean_inefficiency: i / n as f64,
                },
            )
        })
        .collect()
}

/// Result of an online comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineReport {
    pub rci: Vec<RciRecord>,
    /// Same models, calibration disabled (`gamma = 0`).
    pub baseline: Vec<RciRecord>,
    pub summary: OnlineSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineSummary {
    pub warmup: usize,
    pub steps: usize,
    /// Keyed by `rci` and `nqb`.
    pub methods: BTreeMap<String, MethodSummary>,
    /// Mean RCI interval size over mean baseline size.
    pub inefficiency_ratio: f64,
}

/// Time-averaged coverage and interval size after `warmup` steps.
pub fn time_average(records: &[RciRecord], warmup: usize) -> MethodSummary {
    let tail = &records[warmup.min(records.len())..];
    let n = tail.len().max(1) as f64;
    MethodSummary {
        mean_coverage: tail.iter().filter(|r| r.err == 0).count() as f64 / n,
        mean_inefficiency: tail.iter().map(|r| r.interval().size()).sum::<f64>() / n,
    }
}

/// Run RCI and the uncalibrated baseline over `series`.
pub fn run_online_experiment(
    series: &[LabeledExample<f64>],
    rci: &RciConfig,
    warmup: usize,
) -> Result<OnlineReport, HarnessError> {
    if series.len() <= warmup {
        return Err(HarnessError::Data(format!(
            "series of length {} does not exceed the warm-up of {warmup}",
            series.len()
        )));
    }
    let x_dim = series[0].x.len();
    if let Some(bad) = series.iter().position(|e| e.x.len() != x_dim) {
        return Err(HarnessError::Data(format!("input width changes at step {bad}")));
    }
    let config = RciConfig {
        net: rci.net.clone().with_x_dim(x_dim),
        ..rci.clone()
    };
    let mut runs = run_rci_multi(series, &config, &[config.gamma, 0.0])?;
    let baseline = runs.pop().unwrap_or_default();
    let rci_records = runs.pop().unwrap_or_default();
    let (r, b) = (time_average(&rci_records, warmup), time_average(&baseline, warmup));
    let summary = OnlineSummary {
        warmup,
        steps: series.len(),
        methods: BTreeMap::from([("rci".to_string(), r), ("nqb".to_string(), b)]),
        inefficiency_ratio: r.mean_inefficiency / b.mean_inefficiency,
    };
    Ok(OnlineReport {
        rci: rci_records,
        baseline,
        summary,
    })
}

const ONLINE_COLUMNS: [&str; 6] = ["i", "lo", "hi", "y", "err", "theta"];

pub fn online_csv(records: &[RciRecord]) -> Result<Vec<u8>, HarnessError> {
    csv_bytes(
        &format!("cpwire-online v{ONLINE_CSV_VERSION}: {}", ONLINE_COLUMNS.join(",")),
        records,
        &ONLINE_COLUMNS,
    )
}

pub fn write_online_csv(path: &Path, records: &[RciRecord]) -> Result<(), HarnessError> {
    write_atomically(path, &online_csv(records)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| HarnessError::Data(e.to_string()))?;
    bytes.push(b'\n');
    write_atomically(path, &bytes)
}

/// One confidence bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub lo: f64,
    pub hi: f64,
    /// Mean top-label confidence; 0 for an empty bin.
    pub mean_confidence: f64,
    /// Fraction of correct hard decisions; 0 for an empty bin.
    pub accuracy: f64,
    pub count: usize,
}

/// Equal-width bins of top-label confidence over `[1/|Y|, 1]`.
pub fn reliability_diagram<P: ProbabilisticClassifier + ?Sized>(
    predictor: &P,
    test: &[LabeledExample],
    bins: usize,
) -> Result<Vec<ReliabilityBin>, HarnessError> {
    if test.is_empty() {
        return Err(HarnessError::Data("empty test set".into()));
    }
    if bins == 0 {
        return Err(HarnessError::Config("need at least one bin".into()));
    }
    let floor = 1.0 / predictor.num_labels() as f64;
    let width = (1.0 - floor) / bins as f64;
    let mut acc = vec![(0.0, 0usize, 0usize); bins];
    let xs: Vec<f64> = test.iter().flat_map(|e| e.x.iter().copied()).collect();
    let dists = predictor
        .predict_batch(&xs, test.len())
        .map_err(ConformalError::from)?;
    for (e, d) in test.iter().zip(&dists) {
        let (label, conf) = argmax_confidence(d);
        let bin = if width > 0.0 {
            (((conf - floor) / width).floor().max(0.0) as usize).min(bins - 1)
        } else {
            0
        };
        acc[bin].0 += conf;
        acc[bin].1 += usize::from(label == e.y);
        acc[bin].2 += 1;
    }
    Ok(acc
        .into_iter()
        .enumerate()
        .map(|(b, (conf, correct, count))| ReliabilityBin {
            lo: floor + b as f64 * width,
            hi: floor + (b + 1) as f64 * width,
            mean_confidence: if count > 0 { conf / count as f64 } else { 0.0 },
            accuracy: if count > 0 {
                correct as f64 / count as f64
            } else {
                0.0
            },
            count,
        })
        .collect())
}
