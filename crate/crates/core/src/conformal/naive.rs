use super::{ConformalError, PredictionInterval, PredictionSet, SetPredictor};
use crate::diffcore::DiffError;
use crate::learners::{ProbabilisticClassifier, QuantileRegressor};

/// Smallest set whose predicted mass reaches `1 - alpha`: labels are added
/// in decreasing probability (ties to the lower index) until the running mass
/// reaches the target. Returns every label if the target is never reached.
pub fn npb_set(probs: &[f64], alpha: f64) -> PredictionSet {
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    let target = 1.0 - alpha;
    let mut mass = 0.0;
    let mut chosen = Vec::new();
    for label in order {
        if mass >= target {
            break;
        }
        mass += probs[label];
        chosen.push(label);
    }
    PredictionSet::from_labels(chosen)
}

/// Naive probabilistic set predictor; no coverage guarantee.
pub struct NaiveSetPredictor<P> {
    pub predictor: P,
    pub alpha: f64,
}

impl<P: ProbabilisticClassifier> SetPredictor for NaiveSetPredictor<P> {
    fn num_labels(&self) -> usize {
        self.predictor.num_labels()
    }

    fn predict_set(&self, x: &[f64]) -> Result<PredictionSet, ConformalError> {
        Ok(npb_set(&self.predictor.predict_distribution(x)?, self.alpha))
    }

    fn predict_sets(&self, xs: &[f64], rows: usize) -> Result<Vec<PredictionSet>, ConformalError> {
        Ok(self
            .predictor
            .predict_batch(xs, rows)?
            .iter()
            .map(|d| npb_set(d, self.alpha))
            .collect())
    }
}

/// `[lo(x), hi(x)]` from two quantile models; empty when they cross.
pub fn nqb_interval<L, H>(lo: &L, hi: &H, x: &[f64]) -> Result<PredictionInterval, DiffError>
where
    L: QuantileRegressor + ?Sized,
    H: QuantileRegressor + ?Sized,
{
    Ok(PredictionInterval::new(lo.predict(x)?, hi.predict(x)?))
}
