use rand::seq::SliceRandom;
use rand::Rng;

use super::{
    check_alpha, empirical_quantile_from_top, log_loss_scores, nc_scores, ConformalError,
    PredictionSet, SetPredictor,
};
use crate::learners::{LabeledExample, ProbabilisticClassifier};

/// Seeded shuffle, then even positions train and odd positions validate.
/// Training receives the extra example when `N` is odd.
pub fn vb_split<T: Clone, R: Rng + ?Sized>(
    dataset: &[LabeledExample<T>],
    rng: &mut R,
) -> Result<(Vec<LabeledExample<T>>, Vec<LabeledExample<T>>), ConformalError> {
    if dataset.len() < 2 {
        return Err(ConformalError::TooFewExamples {
            needed: 2,
            got: dataset.len(),
        });
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(rng);
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (pos, &i) in order.iter().enumerate() {
        if pos % 2 == 0 {
            train.push(dataset[i].clone());
        } else {
            val.push(dataset[i].clone());
        }
    }
    Ok((train, val))
}

/// Labels whose candidate score is at most the quantile-from-top threshold of
/// the validation scores.
pub fn vb_set_from_scores(
    candidate_scores: &[f64],
    validation_scores: &[f64],
    alpha: f64,
) -> Result<PredictionSet, ConformalError> {
    let threshold = empirical_quantile_from_top(validation_scores, alpha)?;
    Ok(select_below(candidate_scores, threshold))
}

fn select_below(candidate_scores: &[f64], threshold: f64) -> PredictionSet {
    PredictionSet::from_labels(
        candidate_scores
            .iter()
            .enumerate()
            .filter(|(_, &s)| s <= threshold)
            .map(|(l, _)| l)
            .collect(),
    )
}

/// VB-CP set for a single input.
pub fn vb_cp_predict<P: ProbabilisticClassifier + ?Sized>(
    predictor: &P,
    validation_scores: &[f64],
    x: &[f64],
    alpha: f64,
) -> Result<PredictionSet, ConformalError> {
    let candidates = log_loss_scores(&predictor.predict_distribution(x)?);
    vb_set_from_scores(&candidates, validation_scores, alpha)
}

/// Validation-based (split) conformal predictor with a precomputed threshold.
#[derive(Debug, Clone)]
pub struct ValidationConformal<P> {
    predictor: P,
    threshold: f64,
}

impl<P: ProbabilisticClassifier> ValidationConformal<P> {
    pub fn from_scores(predictor: P, validation_scores: &[f64], alpha: f64) -> Result<Self, ConformalError> {
        let threshold = empirical_quantile_from_top(validation_scores, alpha)?;
        Ok(Self {
            predictor,
            threshold,
        })
    }

    /// Score `validation` under `predictor` and set the threshold.
    pub fn calibrate(
        predictor: P,
        validation: &[LabeledExample],
        alpha: f64,
    ) -> Result<Self, ConformalError> {
        let scores = nc_scores(&predictor, validation)?;
        Self::from_scores(predictor, &scores, alpha)
    }

    /// Split `dataset`, train on one half with `train`, calibrate on the other.
    pub fn fit<R, F>(
        dataset: &[LabeledExample],
        alpha: f64,
        split_rng: &mut R,
        train: F,
    ) -> Result<Self, ConformalError>
    where
        R: Rng + ?Sized,
        F: FnOnce(&[LabeledExample]) -> Result<P, ConformalError>,
    {
        check_alpha(alpha)?;
        let (tr, val) = vb_split(dataset, split_rng)?;
        let predictor = train(&tr)?;
        Self::calibrate(predictor, &val, alpha)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn predictor(&self) -> &P {
        &self.predictor
    }
}

impl<P: ProbabilisticClassifier> SetPredictor for ValidationConformal<P> {
    fn num_labels(&self) -> usize {
        self.predictor.num_labels()
    }

    fn predict_set(&self, x: &[f64]) -> Result<PredictionSet, ConformalError> {
        let candidates = log_loss_scores(&self.predictor.predict_distribution(x)?);
        Ok(select_below(&candidates, self.threshold))
    }

    fn predict_sets(&self, xs: &[f64], rows: usize) -> Result<Vec<PredictionSet>, ConformalError> {
        Ok(self
            .predictor
            .predict_batch(xs, rows)?
            .iter()
            .map(|d| select_below(&log_loss_scores(d), self.threshold))
            .collect())
    }
}
