//! Loss heads and reverse-mode gradients of feed-forward networks.

use super::dense::{mlp_backward, mlp_forward};
use super::loss::{check_level, pinball_grad_yhat, pinball_unchecked, softmax, PROB_FLOOR};
use super::{DiffError, LayerSpec, NetworkParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossHead {
    /// Softmax over the output logits followed by floored log-loss.
    CrossEntropy,
    /// Pinball loss at level `q` on a scalar output.
    Pinball { q: f64 },
    /// Sum of squared outputs; has no targets.
    SumSquares,
}

#[derive(Debug, Clone, Copy)]
pub enum Targets<'a> {
    Labels(&'a [usize]),
    Values(&'a [f64]),
    None,
}

/// Row-major inputs with per-row targets.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    pub inputs: &'a [f64],
    pub rows: usize,
    pub targets: Targets<'a>,
}

impl<'a> Batch<'a> {
    pub fn new(inputs: &'a [f64], rows: usize, targets: Targets<'a>) -> Self {
        Self {
            inputs,
            rows,
            targets,
        }
    }
}

/// Objective: mean head loss over the batch plus `weight_decay / 2 * ||params||^2`.
#[derive(Debug, Clone, Copy)]
pub struct Objective {
    pub head: LossHead,
    pub weight_decay: f64,
}

impl Objective {
    pub fn new(head: LossHead) -> Self {
        Self {
            head,
            weight_decay: 0.0,
        }
    }

    pub fn with_weight_decay(mut self, weight_decay: f64) -> Self {
        self.weight_decay = weight_decay;
        self
    }
}

fn check_mlp(params: &NetworkParams) -> Result<usize, DiffError> {
    let layers = params.arch().layers();
    if let Some(layer) = layers
        .iter()
        .position(|l| matches!(l, LayerSpec::Lstm { .. }))
    {
        return Err(DiffError::WrongLayerKind {
            layer,
            expected: "dense",
        });
    }
    if !params.arch().is_chained(0..layers.len()) {
        return Err(DiffError::ShapeMismatch {
            expected: params.arch().input_dim(),
            got: params.arch().output_dim(),
        });
    }
    Ok(layers.len())
}

/// Per-row loss and its gradient w.r.t. the network output.
pub(crate) fn head_loss_and_delta(
    head: LossHead,
    outputs: &[f64],
    width: usize,
    targets: Targets<'_>,
    row: usize,
    delta: &mut [f64],
) -> Result<f64, DiffError> {
    match head {
        LossHead::CrossEntropy => {
            let Targets::Labels(labels) = targets else {
                return Err(DiffError::HeadMismatch("cross-entropy needs labels"));
            };
            let label = labels[row];
            if label >= width {
                return Err(DiffError::LabelOutOfRange {
                    label,
                    classes: width,
                });
            }
            let p = softmax(outputs);
            let max_loss = -PROB_FLOOR.ln();
            let raw = -p[label].ln();
            if raw >= max_loss {
                // floored region is flat
                delta.iter_mut().for_each(|d| *d = 0.0);
                return Ok(max_loss);
            }
            for (k, (d, pk)) in delta.iter_mut().zip(&p).enumerate() {
                *d = pk - if k == label { 1.0 } else { 0.0 };
            }
            Ok(raw)
        }
        LossHead::Pinball { q } => {
            let Targets::Values(values) = targets else {
                return Err(DiffError::HeadMismatch("pinball needs scalar targets"));
            };
            if width != 1 {
                return Err(DiffError::HeadMismatch("pinball needs a scalar output"));
            }
            let (y, yhat) = (values[row], outputs[0]);
            delta[0] = pinball_grad_yhat(q, y, yhat);
            Ok(pinball_unchecked(q, y, yhat))
        }
        LossHead::SumSquares => {
            for (d, o) in delta.iter_mut().zip(outputs) {
                *d = 2.0 * o;
            }
            Ok(outputs.iter().map(|o| o * o).sum())
        }
    }
}

fn validate(params: &NetworkParams, objective: &Objective, batch: &Batch<'_>) -> Result<usize, DiffError> {
    let layers = check_mlp(params)?;
    if batch.rows == 0 {
        return Err(DiffError::EmptyBatch);
    }
    if let LossHead::Pinball { q } = objective.head {
        check_level(q)?;
    }
    let n_in = params.arch().input_dim();
    if batch.inputs.len() != batch.rows * n_in {
        return Err(DiffError::DimensionMismatch {
            layer: 0,
            expected: n_in,
            got: batch.inputs.len() / batch.rows,
        });
    }
    let n_targets = match batch.targets {
        Targets::Labels(l) => Some(l.len()),
        Targets::Values(v) => Some(v.len()),
        Targets::None => None,
    };
    if n_targets.is_some_and(|n| n != batch.rows) {
        return Err(DiffError::ShapeMismatch {
            expected: batch.rows,
            got: n_targets.unwrap_or(0),
        });
    }
    Ok(layers)
}

/// Objective value without gradients.
pub fn loss(params: &NetworkParams, objective: &Objective, batch: &Batch<'_>) -> Result<f64, DiffError> {
    let layers = validate(params, objective, batch)?;
    let tape = mlp_forward(params, 0..layers, batch.inputs.to_vec(), batch.rows)?;
    let width = params.arch().output_dim();
    let mut scratch = vec![0.0; width];
    let mut total = 0.0;
    for (row, out) in tape.output().chunks_exact(width).enumerate() {
        total += head_loss_and_delta(objective.head, out, width, batch.targets, row, &mut scratch)?;
    }
    Ok(total / batch.rows as f64 + 0.5 * objective.weight_decay * params.squared_norm())
}

/// Objective value and its gradient, which has the same block layout as `params`.
pub fn loss_and_grad(
    params: &NetworkParams,
    objective: &Objective,
    batch: &Batch<'_>,
) -> Result<(f64, NetworkParams), DiffError> {
    let layers = validate(params, objective, batch)?;
    let tape = mlp_forward(params, 0..layers, batch.inputs.to_vec(), batch.rows)?;
    let width = params.arch().output_dim();
    let scale = 1.0 / batch.rows as f64;
    let mut d_out = vec![0.0; batch.rows * width];
    let mut total = 0.0;
    for (row, (out, d)) in tape
        .output()
        .chunks_exact(width)
        .zip(d_out.chunks_exact_mut(width))
        .enumerate()
    {
        total += head_loss_and_delta(objective.head, out, width, batch.targets, row, d)?;
        d.iter_mut().for_each(|v| *v *= scale);
    }
    let mut grads = NetworkParams::zeros(params.arch());
    mlp_backward(params, 0..layers, &tape, d_out, &mut grads, false)?;
    let mut value = total * scale;
    if objective.weight_decay != 0.0 {
        grads.axpy(objective.weight_decay, params);
        value += 0.5 * objective.weight_decay * params.squared_norm();
    }
    Ok((value, grads))
}

/// Gradient of the objective; see [`loss_and_grad`].
pub fn grad(
    params: &NetworkParams,
    objective: &Objective,
    batch: &Batch<'_>,
) -> Result<NetworkParams, DiffError> {
    loss_and_grad(params, objective, batch).map(|(_, g)| g)
}

/// Largest relative disagreement between an analytic gradient and central
/// finite differences of `f` with step `step`, over every coordinate.
///
/// Relative error is `|a - n| / max(|a|, |n|, floor)`.
pub fn max_relative_fd_error<F>(
    params: &NetworkParams,
    analytic: &NetworkParams,
    step: f64,
    floor: f64,
    mut f: F,
) -> Result<f64, DiffError>
where
    F: FnMut(&NetworkParams) -> Result<f64, DiffError>,
{
    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    for b in 0..params.blocks().len() {
        for i in 0..params.blocks()[b].len() {
            let orig = params.blocks()[b].values()[i];
            probe.blocks_mut()[b].values_mut()[i] = orig + step;
            let up = f(&probe)?;
            probe.blocks_mut()[b].values_mut()[i] = orig - step;
            let down = f(&probe)?;
            probe.blocks_mut()[b].values_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * step);
            let a = analytic.blocks()[b].values()[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::{Activation, Architecture, Tensor};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sum_squares_of_identity_layer_is_twice_the_weights() {
        let arch = Architecture::mlp(&[1, 3], Activation::Identity, Activation::Identity);
        let w = Tensor::from_vec(&[3, 1], vec![0.5, -1.25, 2.0]).unwrap();
        let params = NetworkParams::from_blocks(&arch, vec![w, Tensor::zeros(&[3])]).unwrap();
        let g = grad(
            &params,
            &Objective::new(LossHead::SumSquares),
            &Batch::new(&[1.0], 1, Targets::None),
        )
        .unwrap();
        assert_eq!(g.blocks()[0].values(), &[1.0, -2.5, 4.0]);
    }

    #[test]
    fn pinball_kink_takes_q_side_slope() {
        // scalar identity model yhat = w * x + b with yhat == y
        let arch = Architecture::mlp(&[1, 1], Activation::Identity, Activation::Identity);
        let params = NetworkParams::from_blocks(
            &arch,
            vec![
                Tensor::from_vec(&[1, 1], vec![2.0]).unwrap(),
                Tensor::from_vec(&[1], vec![1.0]).unwrap(),
            ],
        )
        .unwrap();
        let q = 0.3;
        let g = grad(
            &params,
            &Objective::new(LossHead::Pinball { q }),
            &Batch::new(&[1.5], 1, Targets::Values(&[4.0])),
        )
        .unwrap();
        assert!((g.blocks()[0].values()[0] - (-q * 1.5)).abs() < 1e-15);
        assert!((g.blocks()[1].values()[0] - (-q)).abs() < 1e-15);
    }

    #[test]
    fn weight_decay_adds_params() {
        let arch = Architecture::mlp(&[2, 3, 2], Activation::Selu, Activation::Identity);
        let params = NetworkParams::init(&arch, &mut ChaCha8Rng::seed_from_u64(1));
        let batch = Batch::new(&[0.2, 0.4], 1, Targets::Labels(&[1]));
        let plain = grad(&params, &Objective::new(LossHead::CrossEntropy), &batch).unwrap();
        let decayed = grad(
            &params,
            &Objective::new(LossHead::CrossEntropy).with_weight_decay(0.25),
            &batch,
        )
        .unwrap();
        for ((a, b), p) in plain.values().zip(decayed.values()).zip(params.values()) {
            assert!((b - a - 0.25 * p).abs() < 1e-15);
        }
    }

    #[test]
    fn errors_for_bad_batches() {
        let arch = Architecture::mlp(&[2, 3], Activation::Relu, Activation::Identity);
        let params = NetworkParams::zeros(&arch);
        let obj = Objective::new(LossHead::CrossEntropy);
        assert_eq!(
            grad(&params, &obj, &Batch::new(&[], 0, Targets::Labels(&[]))).unwrap_err(),
            DiffError::EmptyBatch
        );
        assert!(matches!(
            grad(&params, &obj, &Batch::new(&[1.0, 1.0], 1, Targets::Labels(&[3]))),
            Err(DiffError::LabelOutOfRange { .. })
        ));
        assert!(grad(
            &params,
            &Objective::new(LossHead::Pinball { q: 0.5 }),
            &Batch::new(&[1.0, 1.0], 1, Targets::Values(&[0.0]))
        )
        .is_err());
    }

    #[test]
    fn non_finite_input_names_the_layer() {
        let arch = Architecture::mlp(&[2, 3, 2], Activation::Relu, Activation::Identity);
        let params = NetworkParams::init(&arch, &mut ChaCha8Rng::seed_from_u64(2));
        let err = grad(
            &params,
            &Objective::new(LossHead::CrossEntropy),
            &Batch::new(&[f64::NAN, 0.0], 1, Targets::Labels(&[0])),
        )
        .unwrap_err();
        assert_eq!(err, DiffError::NonFinite { layer: 0 });
    }

    #[test]
    fn random_two_layer_net_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let arch = Architecture::mlp(&[3, 4, 3], Activation::Selu, Activation::Identity);
        let params = NetworkParams::init(&arch, &mut rng);
        let inputs: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
        let labels = [0, 2, 1, 1, 0];
        let batch = Batch::new(&inputs, 5, Targets::Labels(&labels));
        let obj = Objective::new(LossHead::CrossEntropy);
        let g = grad(&params, &obj, &batch).unwrap();
        let worst = max_relative_fd_error(&params, &g, 1e-5, 1e-6, |p| loss(p, &obj, &batch)).unwrap();
        assert!(worst < 1e-4, "worst relative error {worst}");
    }
}
