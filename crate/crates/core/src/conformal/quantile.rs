use super::{check_alpha, ConformalError};

// Absorbs decimal round-off in products like (1 - alpha) * (N + 1).
const INDEX_TOLERANCE: f64 = 1e-9;

/// `ceil(level * count)` with a small tolerance for decimal round-off.
pub fn ceil_index(level: f64, count: usize) -> usize {
    ((level * count as f64) - INDEX_TOLERANCE).ceil().max(0.0) as usize
}

/// `floor(level * count)` with a small tolerance for decimal round-off.
pub fn floor_index(level: f64, count: usize) -> usize {
    ((level * count as f64) + INDEX_TOLERANCE).floor().max(0.0) as usize
}

/// The `ceil((1 - alpha)(N + 1))`-th smallest element of `values ∪ {+inf}`.
pub fn empirical_quantile_from_top(values: &[f64], alpha: f64) -> Result<f64, ConformalError> {
    check_alpha(alpha)?;
    let n = values.len();
    let rank = ceil_index(1.0 - alpha, n + 1);
    if rank == 0 {
        // unreachable for alpha < 1, kept total
        return Ok(f64::NEG_INFINITY);
    }
    if rank > n {
        return Ok(f64::INFINITY);
    }
    let mut scratch = values.to_vec();
    let (_, kth, _) = scratch.select_nth_unstable_by(rank - 1, f64::total_cmp);
    Ok(*kth)
}
