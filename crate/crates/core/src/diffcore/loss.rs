use super::DiffError;

/// Lower bound applied to probabilities before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// Numerically stable softmax (max-subtracted).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= sum);
    out
}

/// `-log p[label]`, with `p[label]` floored at [`PROB_FLOOR`].
pub fn cross_entropy(probs: &[f64], label: usize) -> Result<f64, DiffError> {
    let p = *probs.get(label).ok_or(DiffError::LabelOutOfRange {
        label,
        classes: probs.len(),
    })?;
    Ok(-p.max(PROB_FLOOR).ln())
}

/// Pinball (quantile) loss `max{-(1-q)(y-yhat), q(y-yhat)}`.
pub fn pinball_loss(q: f64, y: f64, yhat: f64) -> Result<f64, DiffError> {
    check_level(q)?;
    Ok(pinball_unchecked(q, y, yhat))
}

#[inline]
pub(crate) fn pinball_unchecked(q: f64, y: f64, yhat: f64) -> f64 {
    let r = y - yhat;
    (-(1.0 - q) * r).max(q * r)
}

/// Subgradient of the pinball loss with respect to `yhat`.
///
/// At the kink (`y == yhat`) the `q(y - yhat)` branch is used, i.e. the
/// slope in the residual is `q` and the returned value is `-q`.
#[inline]
pub fn pinball_grad_yhat(q: f64, y: f64, yhat: f64) -> f64 {
    if y >= yhat {
        -q
    } else {
        1.0 - q
    }
}

pub(crate) fn check_level(q: f64) -> Result<(), DiffError> {
    if (0.0..=1.0).contains(&q) {
        Ok(())
    } else {
        Err(DiffError::InvalidQuantileLevel(q))
    }
}
