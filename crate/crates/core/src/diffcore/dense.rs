//! Fully connected layers, single-vector and batched (rows = examples).

use std::ops::Range;

use super::{Activation, DiffError, LayerSpec, NetworkParams, Tensor};

/// `activation(W input + b)` for a single input vector.
pub fn dense_forward(
    weight: &Tensor,
    bias: &Tensor,
    input: &[f64],
    activation: Activation,
) -> Result<Vec<f64>, DiffError> {
    let (outputs, inputs) = (weight.rows(), weight.cols());
    if input.len() != inputs || bias.len() != outputs {
        return Err(DiffError::DimensionMismatch {
            layer: 0,
            expected: inputs,
            got: input.len(),
        });
    }
    Ok((0..outputs)
        .map(|o| {
            let z = weight
                .row(o)
                .iter()
                .zip(input)
                .fold(bias.values()[o], |acc, (w, x)| acc + w * x);
            activation.apply(z)
        })
        .collect())
}

impl NetworkParams {
    /// Forward pass of a single dense layer, reporting errors against `layer`.
    pub fn dense_forward(&self, layer: usize, input: &[f64]) -> Result<Vec<f64>, DiffError> {
        match self.arch().layers()[layer] {
            LayerSpec::Dense { activation, .. } => {
                let blocks = self.layer_blocks(layer);
                dense_forward(&blocks[0], &blocks[1], input, activation)
                    .map_err(|e| e.at_layer(layer))
            }
            LayerSpec::Lstm { .. } => Err(DiffError::WrongLayerKind {
                layer,
                expected: "dense",
            }),
        }
    }
}

/// Cached activations of a batched pass through consecutive dense layers.
#[derive(Debug, Clone)]
pub struct MlpTape {
    rows: usize,
    input: Vec<f64>,
    /// Per layer: (pre-activation, post-activation), each `rows x outputs`.
    layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl MlpTape {
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Final layer output, `rows x outputs` row-major.
    pub fn output(&self) -> &[f64] {
        self.layers
            .last()
            .map_or(self.input.as_slice(), |(_, a)| a.as_slice())
    }
}

fn dense_spec(params: &NetworkParams, layer: usize) -> Result<(usize, usize, Activation), DiffError> {
    match params.arch().layers()[layer] {
        LayerSpec::Dense {
            inputs,
            outputs,
            activation,
        } => Ok((inputs, outputs, activation)),
        LayerSpec::Lstm { .. } => Err(DiffError::WrongLayerKind {
            layer,
            expected: "dense",
        }),
    }
}

/// Forward `rows` examples (row-major `input`) through dense `layers`.
pub fn mlp_forward(
    params: &NetworkParams,
    layers: Range<usize>,
    input: Vec<f64>,
    rows: usize,
) -> Result<MlpTape, DiffError> {
    let mut tape = MlpTape {
        rows,
        input,
        layers: Vec::with_capacity(layers.len()),
    };
    for layer in layers {
        let (inputs, outputs, activation) = dense_spec(params, layer)?;
        let x = tape
            .layers
            .last()
            .map_or(tape.input.as_slice(), |(_, a)| a.as_slice());
        if x.len() != rows * inputs {
            return Err(DiffError::DimensionMismatch {
                layer,
                expected: inputs,
                got: x.len() / rows.max(1),
            });
        }
        let blocks = params.layer_blocks(layer);
        let (w, b) = (blocks[0].values(), blocks[1].values());
        let mut z = vec![0.0; rows * outputs];
        // Z = X W^T
        unsafe {
            matrixmultiply::dgemm(
                rows,
                inputs,
                outputs,
                1.0,
                x.as_ptr(),
                inputs as isize,
                1,
                w.as_ptr(),
                1,
                inputs as isize,
                0.0,
                z.as_mut_ptr(),
                outputs as isize,
                1,
            );
        }
        for row in z.chunks_exact_mut(outputs) {
            for (zi, bi) in row.iter_mut().zip(b) {
                *zi += bi;
            }
        }
        if !z.iter().all(|v| v.is_finite()) {
            return Err(DiffError::NonFinite { layer });
        }
        let a = z.iter().map(|&v| activation.apply(v)).collect();
        tape.layers.push((z, a));
    }
    Ok(tape)
}

/// Backpropagate `d_out` (gradient w.r.t. the tape output) through `layers`,
/// accumulating into `grads`. Returns the gradient w.r.t. the tape input when
/// `need_input_grad` is set, otherwise an empty vector.
pub fn mlp_backward(
    params: &NetworkParams,
    layers: Range<usize>,
    tape: &MlpTape,
    d_out: Vec<f64>,
    grads: &mut NetworkParams,
    need_input_grad: bool,
) -> Result<Vec<f64>, DiffError> {
    let rows = tape.rows;
    let first = layers.start;
    let mut delta = d_out;
    for (pos, layer) in layers.clone().enumerate().rev() {
        let (inputs, outputs, activation) = dense_spec(params, layer)?;
        let (z, _) = &tape.layers[pos];
        for (d, &zi) in delta.iter_mut().zip(z) {
            *d *= activation.derivative(zi);
        }
        let x = if pos == 0 {
            tape.input.as_slice()
        } else {
            tape.layers[pos - 1].1.as_slice()
        };
        let w = params.layer_blocks(layer)[0].values();
        {
            let g = grads.layer_blocks_mut(layer);
            // dW += dZ^T X
            unsafe {
                matrixmultiply::dgemm(
                    outputs,
                    rows,
                    inputs,
                    1.0,
                    delta.as_ptr(),
                    1,
                    outputs as isize,
                    x.as_ptr(),
                    inputs as isize,
                    1,
                    1.0,
                    g[0].values_mut().as_mut_ptr(),
                    inputs as isize,
                    1,
                );
            }
            let gb = g[1].values_mut();
            for row in delta.chunks_exact(outputs) {
                for (acc, d) in gb.iter_mut().zip(row) {
                    *acc += d;
                }
            }
        }
        if layer == first && !need_input_grad {
            return Ok(Vec::new());
        }
        let mut dx = vec![0.0; rows * inputs];
        // dX = dZ W
        unsafe {
            matrixmultiply::dgemm(
                rows,
                outputs,
                inputs,
                1.0,
                delta.as_ptr(),
                outputs as isize,
                1,
                w.as_ptr(),
                inputs as isize,
                1,
                0.0,
                dx.as_mut_ptr(),
                inputs as isize,
                1,
            );
        }
        delta = dx;
    }
    Ok(delta)
}
