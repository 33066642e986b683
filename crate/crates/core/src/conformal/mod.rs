//! Offline set predictors: naive baselines (NPB, NQB), validation-based CP
//! and K-fold cross-validation CP (K = N gives jackknife+).

mod cross;
mod naive;
mod quantile;
mod split;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffcore::{DiffError, PROB_FLOOR};
use crate::learners::{LabeledExample, LearnError, ProbabilisticClassifier};

pub use cross::{fold_assignment, kcv_cp_predict, kcv_set_from_scores, CrossConformal, FoldModel};
pub use naive::{npb_set, nqb_interval, NaiveSetPredictor};
pub use quantile::{ceil_index, empirical_quantile_from_top, floor_index};
pub use split::{vb_cp_predict, vb_set_from_scores, vb_split, ValidationConformal};

#[derive(Debug, Error)]
pub enum ConformalError {
    #[error("miscoverage level {0} outside (0, 1)")]
    InvalidAlpha(f64),
    #[error("{folds} folds do not evenly divide {n} examples")]
    FoldsDoNotDivide { n: usize, folds: usize },
    #[error("need at least {needed} examples, got {got}")]
    TooFewExamples { needed: usize, got: usize },
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Learn(#[from] LearnError),
}

pub(crate) fn check_alpha(alpha: f64) -> Result<(), ConformalError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(ConformalError::InvalidAlpha(alpha))
    }
}

/// Sorted, duplicate-free subset of label indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PredictionSet {
    labels: Vec<usize>,
}

impl PredictionSet {
    pub fn from_labels(mut labels: Vec<usize>) -> Self {
        labels.sort_unstable();
        labels.dedup();
        Self { labels }
    }

    pub fn full(num_labels: usize) -> Self {
        Self {
            labels: (0..num_labels).collect(),
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn contains(&self, label: usize) -> bool {
        self.labels.binary_search(&label).is_ok()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn is_superset_of(&self, other: &PredictionSet) -> bool {
        other.labels.iter().all(|&l| self.contains(l))
    }
}

/// Closed interval `[lo, hi]`, or empty when the bounds cross.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionInterval {
    pub lo: f64,
    pub hi: f64,
    pub empty: bool,
}

impl PredictionInterval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            empty: lo > hi,
        }
    }

    /// `max(hi - lo, 0)`.
    pub fn size(&self) -> f64 {
        if self.empty {
            0.0
        } else {
            self.hi - self.lo
        }
    }

    pub fn contains(&self, y: f64) -> bool {
        !self.empty && self.lo <= y && y <= self.hi
    }
}

/// How the miscoverage level enters the cross-validation rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvAlphaMode {
    /// Use `alpha` directly (coverage guarantee `1 - 2 alpha`).
    #[default]
    Alpha,
    /// Use `alpha / 2`, which restores the `1 - alpha` guarantee.
    AlphaHalf,
}

impl CvAlphaMode {
    pub fn effective(self, alpha: f64) -> f64 {
        match self {
            CvAlphaMode::Alpha => alpha,
            CvAlphaMode::AlphaHalf => alpha / 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpConfig {
    pub alpha: f64,
    pub folds: usize,
    pub cv_alpha_mode: CvAlphaMode,
}

impl Default for CpConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            folds: 4,
            cv_alpha_mode: CvAlphaMode::Alpha,
        }
    }
}

/// Maps an input to a subset of the label space.
pub trait SetPredictor {
    fn num_labels(&self) -> usize;

    fn predict_set(&self, x: &[f64]) -> Result<PredictionSet, ConformalError>;

    /// Sets for many inputs (row-major).
    fn predict_sets(&self, xs: &[f64], rows: usize) -> Result<Vec<PredictionSet>, ConformalError> {
        let d = if rows == 0 { 0 } else { xs.len() / rows };
        (0..rows)
            .map(|r| self.predict_set(&xs[r * d..(r + 1) * d]))
            .collect()
    }
}

/// Log-loss nonconformity of every candidate label under `dist`.
pub fn log_loss_scores(dist: &[f64]) -> Vec<f64> {
    dist.iter().map(|p| -p.max(PROB_FLOOR).ln()).collect()
}

/// `-log p(y | x)` under the trained predictor, floored like training.
pub fn nc_score_logloss<P: ProbabilisticClassifier + ?Sized>(
    predictor: &P,
    example: &LabeledExample,
) -> Result<f64, ConformalError> {
    let dist = predictor.predict_distribution(&example.x)?;
    let p = *dist.get(example.y).ok_or(DiffError::LabelOutOfRange {
        label: example.y,
        classes: dist.len(),
    })?;
    Ok(-p.max(PROB_FLOOR).ln())
}

/// Scores of a whole labelled set, computed with one batched forward pass.
pub fn nc_scores<P: ProbabilisticClassifier + ?Sized>(
    predictor: &P,
    examples: &[LabeledExample],
) -> Result<Vec<f64>, ConformalError> {
    if examples.is_empty() {
        return Ok(Vec::new());
    }
    let xs: Vec<f64> = examples.iter().flat_map(|e| e.x.iter().copied()).collect();
    let dists = predictor.predict_batch(&xs, examples.len())?;
    examples
        .iter()
        .zip(dists)
        .map(|(e, d)| {
            let p = *d.get(e.y).ok_or(DiffError::LabelOutOfRange {
                label: e.y,
                classes: d.len(),
            })?;
            Ok(-p.max(PROB_FLOOR).ln())
        })
        .collect()
}
