use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Activation, DiffError, Tensor};

pub const PARAMS_FORMAT_VERSION: u32 = 1;

/// One layer of an architecture descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayerSpec {
    /// `activation(W x + b)` with `W: outputs x inputs`.
    Dense {
        inputs: usize,
        outputs: usize,
        activation: Activation,
    },
    /// LSTM layer with gate blocks ordered (input, forget, candidate, output).
    Lstm { inputs: usize, hidden: usize },
}

impl LayerSpec {
    pub fn block_shapes(&self) -> Vec<Vec<usize>> {
        match *self {
            LayerSpec::Dense {
                inputs, outputs, ..
            } => vec![vec![outputs, inputs], vec![outputs]],
            LayerSpec::Lstm { inputs, hidden } => vec![
                vec![4 * hidden, inputs],
                vec![4 * hidden, hidden],
                vec![4 * hidden],
            ],
        }
    }

    pub fn inputs(&self) -> usize {
        match *self {
            LayerSpec::Dense { inputs, .. } | LayerSpec::Lstm { inputs, .. } => inputs,
        }
    }

    pub fn outputs(&self) -> usize {
        match *self {
            LayerSpec::Dense { outputs, .. } => outputs,
            LayerSpec::Lstm { hidden, .. } => hidden,
        }
    }

    fn num_blocks(&self) -> usize {
        match self {
            LayerSpec::Dense { .. } => 2,
            LayerSpec::Lstm { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    layers: Vec<LayerSpec>,
}

impl Architecture {
    pub fn new(layers: Vec<LayerSpec>) -> Self {
        Self { layers }
    }

    /// Fully connected net over `sizes`, `hidden` activation on every layer
    /// except the last, which uses `output`.
    pub fn mlp(sizes: &[usize], hidden: Activation, output: Activation) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs at least input and output sizes");
        let n = sizes.len() - 1;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| LayerSpec::Dense {
                inputs: w[0],
                outputs: w[1],
                activation: if i + 1 == n { output } else { hidden },
            })
            .collect();
        Self { layers }
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, LayerSpec::inputs)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, LayerSpec::outputs)
    }

    pub fn block_shapes(&self) -> Vec<Vec<usize>> {
        self.layers.iter().flat_map(LayerSpec::block_shapes).collect()
    }

    pub fn num_params(&self) -> usize {
        self.block_shapes()
            .iter()
            .map(|s| s.iter().product::<usize>())
            .sum()
    }

    /// Range of block indices owned by `layer`.
    pub fn block_range(&self, layer: usize) -> Range<usize> {
        let start: usize = self.layers[..layer].iter().map(LayerSpec::num_blocks).sum();
        start..start + self.layers[layer].num_blocks()
    }

    /// Consecutive layers must agree on widths.
    pub fn is_chained(&self, layers: Range<usize>) -> bool {
        self.layers[layers]
            .windows(2)
            .all(|w| w[0].outputs() == w[1].inputs())
    }
}

/// Parameters of a network: one tensor per block, in layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    arch: Architecture,
    blocks: Vec<Tensor>,
}

#[derive(Serialize, Deserialize)]
struct ParamsHeader {
    format_version: u32,
    architecture: Architecture,
    block_shapes: Vec<Vec<usize>>,
}

impl NetworkParams {
    pub fn zeros(arch: &Architecture) -> Self {
        let blocks = arch.block_shapes().iter().map(|s| Tensor::zeros(s)).collect();
        Self {
            arch: arch.clone(),
            blocks,
        }
    }

    /// Glorot-uniform weights, zero biases; LSTM forget-gate biases start at 1.
    pub fn init<R: Rng + ?Sized>(arch: &Architecture, rng: &mut R) -> Self {
        let mut params = Self::zeros(arch);
        for (layer, spec) in arch.layers().iter().enumerate() {
            let range = arch.block_range(layer);
            let blocks = &mut params.blocks[range];
            match *spec {
                LayerSpec::Dense {
                    inputs, outputs, ..
                } => glorot(&mut blocks[0], inputs, outputs, rng),
                LayerSpec::Lstm { inputs, hidden } => {
                    glorot(&mut blocks[0], inputs, hidden, rng);
                    glorot(&mut blocks[1], hidden, hidden, rng);
                    blocks[2].values_mut()[hidden..2 * hidden].fill(1.0);
                }
            }
        }
        params
    }

    pub fn from_blocks(arch: &Architecture, blocks: Vec<Tensor>) -> Result<Self, DiffError> {
        let shapes = arch.block_shapes();
        if shapes.len() != blocks.len() {
            return Err(DiffError::ShapeMismatch {
                expected: shapes.len(),
                got: blocks.len(),
            });
        }
        for (shape, block) in shapes.iter().zip(&blocks) {
            if shape.as_slice() != block.shape() {
                return Err(DiffError::ShapeMismatch {
                    expected: shape.iter().product(),
                    got: block.len(),
                });
            }
        }
        Ok(Self {
            arch: arch.clone(),
            blocks,
        })
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn blocks(&self) -> &[Tensor] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [Tensor] {
        &mut self.blocks
    }

    /// Blocks belonging to one layer.
    pub fn layer_blocks(&self, layer: usize) -> &[Tensor] {
        &self.blocks[self.arch.block_range(layer)]
    }

    pub fn layer_blocks_mut(&mut self, layer: usize) -> &mut [Tensor] {
        let range = self.arch.block_range(layer);
        &mut self.blocks[range]
    }

    pub fn num_params(&self) -> usize {
        self.blocks.iter().map(Tensor::len).sum()
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.blocks.iter().flat_map(|b| b.values().iter())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.blocks.iter_mut().flat_map(|b| b.values_mut().iter_mut())
    }

    /// `self += alpha * other`, block by block.
    pub fn axpy(&mut self, alpha: f64, other: &NetworkParams) {
        debug_assert_eq!(self.arch, other.arch);
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            a.axpy(alpha, b);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.values_mut().for_each(|v| *v *= factor);
    }

    pub fn squared_norm(&self) -> f64 {
        self.values().map(|v| v * v).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().all(Tensor::is_finite)
    }

    /// Serialize as `u64 header length | JSON header | little-endian f64 values`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = ParamsHeader {
            format_version: PARAMS_FORMAT_VERSION,
            architecture: self.arch.clone(),
            block_shapes: self.arch.block_shapes(),
        };
        let json = serde_json::to_vec(&header).expect("header serialization cannot fail");
        let mut out = Vec::with_capacity(8 + json.len() + 8 * self.num_params());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for v in self.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DiffError> {
        let (params, used) = Self::read_prefix(bytes)?;
        if used != bytes.len() {
            return Err(DiffError::Decode(format!(
                "{} trailing bytes after parameters",
                bytes.len() - used
            )));
        }
        Ok(params)
    }

    /// Decode one parameter blob from the front of `bytes`, returning the
    /// number of bytes consumed.
    pub fn read_prefix(bytes: &[u8]) -> Result<(Self, usize), DiffError> {
        let len_bytes: [u8; 8] = bytes
            .get(..8)
            .and_then(|b| b.try_into().ok())
            .ok_or_else(|| DiffError::Decode("truncated header length".into()))?;
        let header_len = u64::from_le_bytes(len_bytes) as usize;
        let json = bytes
            .get(8..8 + header_len)
            .ok_or_else(|| DiffError::Decode("truncated header".into()))?;
        let header: ParamsHeader =
            serde_json::from_slice(json).map_err(|e| DiffError::Decode(e.to_string()))?;
        if header.format_version != PARAMS_FORMAT_VERSION {
            return Err(DiffError::Decode(format!(
                "unsupported format version {}",
                header.format_version
            )));
        }
        if header.block_shapes != header.architecture.block_shapes() {
            return Err(DiffError::Decode(
                "block shapes disagree with architecture".into(),
            ));
        }
        let mut offset = 8 + header_len;
        let mut blocks = Vec::with_capacity(header.block_shapes.len());
        for shape in &header.block_shapes {
            let n: usize = shape.iter().product();
            let raw = bytes
                .get(offset..offset + 8 * n)
                .ok_or_else(|| DiffError::Decode("truncated values".into()))?;
            let values = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            blocks.push(Tensor::from_vec(shape, values)?);
            offset += 8 * n;
        }
        let params = Self::from_blocks(&header.architecture, blocks)?;
        Ok((params, offset))
    }
}

fn glorot<R: Rng + ?Sized>(block: &mut Tensor, fan_in: usize, fan_out: usize, rng: &mut R) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in block.values_mut() {
        *v = rng.random_range(-limit..limit);
    }
}
