//! LSTM layers. Gate rows are ordered (input, forget, candidate, output).

use super::activation::sigmoid;
use super::{DiffError, LayerSpec, NetworkParams, Tensor};

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// One LSTM step. Returns `(h', c')`.
pub fn lstm_cell(
    w_ih: &Tensor,
    w_hh: &Tensor,
    bias: &Tensor,
    input: &[f64],
    h: &[f64],
    c: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), DiffError> {
    let hidden = w_hh.cols();
    if w_ih.rows() != 4 * hidden || w_hh.rows() != 4 * hidden || bias.len() != 4 * hidden {
        return Err(DiffError::ShapeMismatch {
            expected: 4 * hidden,
            got: w_ih.rows(),
        });
    }
    if input.len() != w_ih.cols() {
        return Err(DiffError::DimensionMismatch {
            layer: 0,
            expected: w_ih.cols(),
            got: input.len(),
        });
    }
    if h.len() != hidden || c.len() != hidden {
        return Err(DiffError::DimensionMismatch {
            layer: 0,
            expected: hidden,
            got: h.len().min(c.len()),
        });
    }
    let z: Vec<f64> = (0..4 * hidden)
        .map(|r| bias.values()[r] + dot(w_ih.row(r), input) + dot(w_hh.row(r), h))
        .collect();
    let mut h_next = vec![0.0; hidden];
    let mut c_next = vec![0.0; hidden];
    for j in 0..hidden {
        let i = sigmoid(z[j]);
        let f = sigmoid(z[hidden + j]);
        let g = z[2 * hidden + j].tanh();
        let o = sigmoid(z[3 * hidden + j]);
        c_next[j] = f * c[j] + i * g;
        h_next[j] = o * c_next[j].tanh();
    }
    Ok((h_next, c_next))
}

/// Cached state of an LSTM layer unrolled over a sequence from zero state.
#[derive(Debug, Clone)]
pub struct LstmTape {
    steps: usize,
    hidden: usize,
    inputs: Vec<f64>,
    /// `h_0..h_T`, `(T + 1) x hidden`; `h_0 = 0`.
    hs: Vec<f64>,
    /// `c_0..c_T`.
    cs: Vec<f64>,
    /// Activated gates per step, `T x 4 hidden`.
    gates: Vec<f64>,
}

impl LstmTape {
    /// Hidden outputs `h_1..h_T`, row-major `T x hidden`.
    pub fn outputs(&self) -> &[f64] {
        &self.hs[self.hidden..]
    }

    pub fn last_hidden(&self) -> &[f64] {
        &self.hs[self.steps * self.hidden..]
    }
}

fn lstm_spec(params: &NetworkParams, layer: usize) -> Result<(usize, usize), DiffError> {
    match params.arch().layers()[layer] {
        LayerSpec::Lstm { inputs, hidden } => Ok((inputs, hidden)),
        LayerSpec::Dense { .. } => Err(DiffError::WrongLayerKind {
            layer,
            expected: "lstm",
        }),
    }
}

/// Run LSTM `layer` over `steps` inputs (row-major) starting from zero state.
pub fn lstm_forward(
    params: &NetworkParams,
    layer: usize,
    inputs: Vec<f64>,
    steps: usize,
) -> Result<LstmTape, DiffError> {
    let (n_in, hidden) = lstm_spec(params, layer)?;
    if inputs.len() != steps * n_in {
        return Err(DiffError::DimensionMismatch {
            layer,
            expected: n_in,
            got: inputs.len() / steps.max(1),
        });
    }
    let blocks = params.layer_blocks(layer);
    let (w_ih, w_hh, bias) = (&blocks[0], &blocks[1], blocks[2].values());
    let g4 = 4 * hidden;
    // input projections for every step at once
    let mut zin = vec![0.0; steps * g4];
    unsafe {
        matrixmultiply::dgemm(
            steps,
            n_in,
            g4,
            1.0,
            inputs.as_ptr(),
            n_in as isize,
            1,
            w_ih.values().as_ptr(),
            1,
            n_in as isize,
            0.0,
            zin.as_mut_ptr(),
            g4 as isize,
            1,
        );
    }
    let mut hs = vec![0.0; (steps + 1) * hidden];
    let mut cs = vec![0.0; (steps + 1) * hidden];
    let mut gates = vec![0.0; steps * g4];
    for t in 0..steps {
        let (h_prev, c_prev) = (
            &hs[t * hidden..(t + 1) * hidden],
            &cs[t * hidden..(t + 1) * hidden],
        );
        let gate = &mut gates[t * g4..(t + 1) * g4];
        for r in 0..g4 {
            let z = zin[t * g4 + r] + bias[r] + dot(w_hh.row(r), h_prev);
            if !z.is_finite() {
                return Err(DiffError::NonFinite { layer });
            }
            gate[r] = if (2 * hidden..3 * hidden).contains(&r) {
                z.tanh()
            } else {
                sigmoid(z)
            };
        }
        let mut c_new = vec![0.0; hidden];
        let mut h_new = vec![0.0; hidden];
        for j in 0..hidden {
            let (i, f, g, o) = (
                gate[j],
                gate[hidden + j],
                gate[2 * hidden + j],
                gate[3 * hidden + j],
            );
            c_new[j] = f * c_prev[j] + i * g;
            h_new[j] = o * c_new[j].tanh();
        }
        cs[(t + 1) * hidden..(t + 2) * hidden].copy_from_slice(&c_new);
        hs[(t + 1) * hidden..(t + 2) * hidden].copy_from_slice(&h_new);
    }
    Ok(LstmTape {
        steps,
        hidden,
        inputs,
        hs,
        cs,
        gates,
    })
}

/// Backpropagation through time. `d_outputs` is the gradient w.r.t. every
/// `h_t` (`T x hidden`). Accumulates parameter gradients into `grads` and
/// returns the gradient w.r.t. the inputs (`T x inputs`).
pub fn lstm_backward(
    params: &NetworkParams,
    layer: usize,
    tape: &LstmTape,
    d_outputs: &[f64],
    grads: &mut NetworkParams,
) -> Result<Vec<f64>, DiffError> {
    let (n_in, hidden) = lstm_spec(params, layer)?;
    let (steps, g4) = (tape.steps, 4 * hidden);
    let w_ih = params.layer_blocks(layer)[0].values();
    let w_hh = params.layer_blocks(layer)[1].values();
    let mut dz_all = vec![0.0; steps * g4];
    let mut dh_next = vec![0.0; hidden];
    let mut dc_next = vec![0.0; hidden];
    for t in (0..steps).rev() {
        let gate = &tape.gates[t * g4..(t + 1) * g4];
        let c_prev = &tape.cs[t * hidden..(t + 1) * hidden];
        let c_cur = &tape.cs[(t + 1) * hidden..(t + 2) * hidden];
        let dz = &mut dz_all[t * g4..(t + 1) * g4];
        for j in 0..hidden {
            let (i, f, g, o) = (
                gate[j],
                gate[hidden + j],
                gate[2 * hidden + j],
                gate[3 * hidden + j],
            );
            let tc = c_cur[j].tanh();
            let dh = d_outputs[t * hidden + j] + dh_next[j];
            let dc = dc_next[j] + dh * o * (1.0 - tc * tc);
            dz[j] = dc * g * i * (1.0 - i);
            dz[hidden + j] = dc * c_prev[j] * f * (1.0 - f);
            dz[2 * hidden + j] = dc * i * (1.0 - g * g);
            dz[3 * hidden + j] = dh * tc * o * (1.0 - o);
            dc_next[j] = dc * f;
        }
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        for (r, &d) in dz.iter().enumerate() {
            let row = &w_hh[r * hidden..(r + 1) * hidden];
            for (acc, w) in dh_next.iter_mut().zip(row) {
                *acc += d * w;
            }
        }
    }
    let g = grads.layer_blocks_mut(layer);
    let h_prev = &tape.hs[..steps * hidden];
    unsafe {
        // dW_ih += dZ^T X
        matrixmultiply::dgemm(
            g4,
            steps,
            n_in,
            1.0,
            dz_all.as_ptr(),
            1,
            g4 as isize,
            tape.inputs.as_ptr(),
            n_in as isize,
            1,
            1.0,
            g[0].values_mut().as_mut_ptr(),
            n_in as isize,
            1,
        );
        // dW_hh += dZ^T H_prev
        matrixmultiply::dgemm(
            g4,
            steps,
            hidden,
            1.0,
            dz_all.as_ptr(),
            1,
            g4 as isize,
            h_prev.as_ptr(),
            hidden as isize,
            1,
            1.0,
            g[1].values_mut().as_mut_ptr(),
            hidden as isize,
            1,
        );
    }
    let gb = g[2].values_mut();
    for row in dz_all.chunks_exact(g4) {
        for (acc, d) in gb.iter_mut().zip(row) {
            *acc += d;
        }
    }
    let mut dx = vec![0.0; steps * n_in];
    unsafe {
        // dX = dZ W_ih
        matrixmultiply::dgemm(
            steps,
            g4,
            n_in,
            1.0,
            dz_all.as_ptr(),
            g4 as isize,
            1,
            w_ih.as_ptr(),
            n_in as isize,
            1,
            0.0,
            dx.as_mut_ptr(),
            n_in as isize,
            1,
        );
    }
    Ok(dx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::Architecture;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zero_blocks(n_in: usize, hidden: usize) -> (Tensor, Tensor, Tensor) {
        (
            Tensor::zeros(&[4 * hidden, n_in]),
            Tensor::zeros(&[4 * hidden, hidden]),
            Tensor::zeros(&[4 * hidden]),
        )
    }

    #[test]
    fn zero_params_and_state_give_zero_hidden() {
        let (a, b, c) = zero_blocks(3, 32);
        let (h, cell) = lstm_cell(&a, &b, &c, &[0.4, -1.0, 2.0], &[0.0; 32], &[0.0; 32]).unwrap();
        assert_eq!(h, vec![0.0; 32]);
        assert_eq!(cell, vec![0.0; 32]);
    }

    #[test]
    fn zero_weights_halve_the_cell_state() {
        let (a, b, c) = zero_blocks(2, 4);
        let cell_in = [1.0, -2.0, 0.5, 4.0];
        let (h, cell) = lstm_cell(&a, &b, &c, &[3.0, 1.0], &[0.2; 4], &cell_in).unwrap();
        for (got, want) in cell.iter().zip(cell_in) {
            assert!((got - want / 2.0).abs() < 1e-15);
        }
        assert_eq!(h.len(), 4);
    }

    #[test]
    fn cell_rejects_wrong_state_length() {
        let (a, b, c) = zero_blocks(2, 4);
        assert!(lstm_cell(&a, &b, &c, &[0.0, 0.0], &[0.0; 3], &[0.0; 4]).is_err());
        assert!(lstm_cell(&a, &b, &c, &[0.0], &[0.0; 4], &[0.0; 4]).is_err());
    }

    #[test]
    fn unrolled_layer_matches_cell_steps() {
        let arch = Architecture::new(vec![LayerSpec::Lstm {
            inputs: 2,
            hidden: 5,
        }]);
        let params = NetworkParams::init(&arch, &mut ChaCha8Rng::seed_from_u64(8));
        let xs = [0.3, -0.2, 1.1, 0.0, -0.7, 0.9];
        let tape = lstm_forward(&params, 0, xs.to_vec(), 3).unwrap();
        let b = params.layer_blocks(0);
        let (mut h, mut c) = (vec![0.0; 5], vec![0.0; 5]);
        for t in 0..3 {
            let (h2, c2) = lstm_cell(&b[0], &b[1], &b[2], &xs[2 * t..2 * t + 2], &h, &c).unwrap();
            h = h2;
            c = c2;
            for (a, e) in h.iter().zip(&tape.outputs()[5 * t..5 * (t + 1)]) {
                assert!((a - e).abs() < 1e-14);
            }
        }
        assert_eq!(tape.last_hidden().len(), 5);
    }
}
