use rand::seq::SliceRandom;
use rand::Rng;

use super::{
    check_alpha, floor_index, log_loss_scores, nc_scores, ConformalError, CvAlphaMode,
    PredictionSet, SetPredictor,
};
use crate::learners::{LabeledExample, ProbabilisticClassifier};

/// Partition `0..n` into `k` contiguous blocks of a seeded permutation.
pub fn fold_assignment<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>, ConformalError> {
    if k < 2 || k > n || !n.is_multiple_of(k) {
        return Err(ConformalError::FoldsDoNotDivide { n, folds: k });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    Ok(order.chunks(n / k).map(<[usize]>::to_vec).collect())
}

/// Cross-validation membership rule: label `y` is kept iff
/// `sum_k #{z in S_k : NC_k(x, y) <= NC_k(z)} >= floor(alpha (N + 1))`.
///
/// `candidate_scores[k][y]` is the score of `(x, y)` under the model trained
/// without fold `k`; `fold_scores[k]` are that fold's held-out scores.
pub fn kcv_set_from_scores(
    candidate_scores: &[Vec<f64>],
    fold_scores: &[Vec<f64>],
    alpha: f64,
) -> Result<PredictionSet, ConformalError> {
    check_alpha(alpha)?;
    let k = fold_scores.len();
    let n: usize = fold_scores.iter().map(Vec::len).sum();
    if k == 0 || !n.is_multiple_of(k) || fold_scores.iter().any(|f| f.len() != n / k) {
        return Err(ConformalError::FoldsDoNotDivide { n, folds: k });
    }
    let threshold = floor_index(alpha, n + 1);
    let labels = candidate_scores.first().map_or(0, Vec::len);
    Ok(PredictionSet::from_labels(
        (0..labels)
            .filter(|&y| {
                let count: usize = candidate_scores
                    .iter()
                    .zip(fold_scores)
                    .map(|(cand, scores)| scores.iter().filter(|&&s| cand[y] <= s).count())
                    .sum();
                count >= threshold
            })
            .collect(),
    ))
}

/// K-CV-CP set for one input from `K` fold predictors and their held-out scores.
pub fn kcv_cp_predict<P: ProbabilisticClassifier>(
    fold_predictors: &[P],
    fold_scores: &[Vec<f64>],
    x: &[f64],
    alpha: f64,
    folds: usize,
) -> Result<PredictionSet, ConformalError> {
    let n: usize = fold_scores.iter().map(Vec::len).sum();
    if fold_predictors.len() != folds || fold_scores.len() != folds {
        return Err(ConformalError::FoldsDoNotDivide { n, folds });
    }
    let candidates = fold_predictors
        .iter()
        .map(|p| Ok(log_loss_scores(&p.predict_distribution(x)?)))
        .collect::<Result<Vec<_>, ConformalError>>()?;
    kcv_set_from_scores(&candidates, fold_scores, alpha)
}

/// A leave-fold-out model and the scores of its held-out fold.
#[derive(Debug, Clone)]
pub struct FoldModel<P> {
    pub predictor: P,
    pub scores: Vec<f64>,
}

/// K-fold cross-validation conformal predictor.
#[derive(Debug, Clone)]
pub struct CrossConformal<P> {
    folds: Vec<FoldModel<P>>,
    alpha: f64,
}

impl<P: ProbabilisticClassifier> CrossConformal<P> {
    /// `alpha` is the level used in the membership rule (already adjusted
    /// for the alpha mode).
    pub fn from_folds(folds: Vec<FoldModel<P>>, alpha: f64) -> Result<Self, ConformalError> {
        check_alpha(alpha)?;
        let k = folds.len();
        let n: usize = folds.iter().map(|f| f.scores.len()).sum();
        if k == 0 || !n.is_multiple_of(k) || folds.iter().any(|f| f.scores.len() != n / k) {
            return Err(ConformalError::FoldsDoNotDivide { n, folds: k });
        }
        Ok(Self { folds, alpha })
    }

    /// Train `k` leave-fold-out models with `train(subset, fold_index)`.
    pub fn fit<R, F>(
        dataset: &[LabeledExample],
        k: usize,
        alpha: f64,
        mode: CvAlphaMode,
        fold_rng: &mut R,
        mut train: F,
    ) -> Result<Self, ConformalError>
    where
        R: Rng + ?Sized,
        F: FnMut(&[LabeledExample], usize) -> Result<P, ConformalError>,
    {
        check_alpha(alpha)?;
        let assignment = fold_assignment(dataset.len(), k, fold_rng)?;
        let mut in_fold = vec![0usize; dataset.len()];
        for (f, members) in assignment.iter().enumerate() {
            for &i in members {
                in_fold[i] = f;
            }
        }
        let mut folds = Vec::with_capacity(k);
        for (f, members) in assignment.iter().enumerate() {
            let rest: Vec<LabeledExample> = dataset
                .iter()
                .zip(&in_fold)
                .filter(|(_, &g)| g != f)
                .map(|(e, _)| e.clone())
                .collect();
            let held_out: Vec<LabeledExample> = members.iter().map(|&i| dataset[i].clone()).collect();
            let predictor = train(&rest, f)?;
            let scores = nc_scores(&predictor, &held_out)?;
            folds.push(FoldModel { predictor, scores });
        }
        Self::from_folds(folds, mode.effective(alpha))
    }

    pub fn folds(&self) -> &[FoldModel<P>] {
        &self.folds
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn fold_scores(&self) -> Vec<Vec<f64>> {
        self.folds.iter().map(|f| f.scores.clone()).collect()
    }
}

impl<P: ProbabilisticClassifier> SetPredictor for CrossConformal<P> {
    fn num_labels(&self) -> usize {
        self.folds[0].predictor.num_labels()
    }

    fn predict_set(&self, x: &[f64]) -> Result<PredictionSet, ConformalError> {
        let candidates = self
            .folds
            .iter()
            .map(|f| Ok(log_loss_scores(&f.predictor.predict_distribution(x)?)))
            .collect::<Result<Vec<_>, ConformalError>>()?;
        kcv_set_from_scores(&candidates, &self.fold_scores(), self.alpha)
    }

    fn predict_sets(&self, xs: &[f64], rows: usize) -> Result<Vec<PredictionSet>, ConformalError> {
        let per_fold = self
            .folds
            .iter()
            .map(|f| f.predictor.predict_batch(xs, rows))
            .collect::<Result<Vec<_>, _>>()?;
        let scores = self.fold_scores();
        (0..rows)
            .map(|r| {
                let candidates: Vec<Vec<f64>> =
                    per_fold.iter().map(|d| log_loss_scores(&d[r])).collect();
                kcv_set_from_scores(&candidates, &scores, self.alpha)
            })
            .collect()
    }
}
