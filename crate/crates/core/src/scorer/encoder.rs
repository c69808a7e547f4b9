use ndarray::{Array2, Axis};

use super::{DenseLayer, ModelParams};
use crate::encoding::AugmentedFeatures;
use crate::error::{CelpError, Result};
use crate::graph::Graph;

/// `D~^-1/2 (A + I) D~^-1/2` in CSR form. Symmetric.
#[derive(Debug, Clone)]
pub struct NormalizedAdjacency {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl NormalizedAdjacency {
    pub fn from_graph(g: &Graph) -> Self {
        let n = g.n();
        let inv_sqrt: Vec<f64> = (0..n).map(|v| 1.0 / ((g.degree(v) + 1) as f64).sqrt()).collect();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(2 * g.edge_count() + n);
        let mut vals = Vec::with_capacity(cols.capacity());
        offsets.push(0);
        for v in 0..n {
            let nb = g.neighbors(v);
            let split = nb.partition_point(|&w| w < v);
            let row = nb[..split].iter().chain(std::iter::once(&v)).chain(&nb[split..]);
            for &w in row {
                cols.push(w);
                vals.push(inv_sqrt[v] * inv_sqrt[w]);
            }
            offsets.push(cols.len());
        }
        NormalizedAdjacency { offsets, cols, vals }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(x.raw_dim());
        for v in 0..self.n() {
            let mut row = out.row_mut(v);
            for i in self.offsets[v]..self.offsets[v + 1] {
                row.scaled_add(self.vals[i], &x.row(self.cols[i]));
            }
        }
        out
    }
}

/// Per-layer activations kept for the backward pass.
pub(crate) struct EncoderCache {
    /// `A_norm H_l` for each layer input.
    pub aggregated: Vec<Array2<f64>>,
    /// `H_{l+1}` for each layer.
    pub outputs: Vec<Array2<f64>>,
}

pub(crate) fn encoder_forward(adj: &NormalizedAdjacency, x: &Array2<f64>, layers: &[DenseLayer]) -> EncoderCache {
    let mut aggregated = Vec::with_capacity(layers.len());
    let mut outputs: Vec<Array2<f64>> = Vec::with_capacity(layers.len());
    for layer in layers {
        let input = outputs.last().unwrap_or(x);
        let agg = adj.apply(input);
        let mut z = agg.dot(&layer.weight);
        z += &layer.bias;
        z.mapv_inplace(f64::tanh);
        aggregated.push(agg);
        outputs.push(z);
    }
    EncoderCache { aggregated, outputs }
}

/// Gradients of every encoder layer given `dL/dH_L`.
pub(crate) fn encoder_backward(
    adj: &NormalizedAdjacency,
    cache: &EncoderCache,
    layers: &[DenseLayer],
    d_out: Array2<f64>,
) -> Vec<DenseLayer> {
    let mut grads = Vec::with_capacity(layers.len());
    let mut d_h = d_out;
    for l in (0..layers.len()).rev() {
        let h = &cache.outputs[l];
        let d_z = &d_h * &h.mapv(|t| 1.0 - t * t);
        let weight = cache.aggregated[l].t().dot(&d_z);
        let bias = d_z.sum_axis(Axis(0));
        if l > 0 {
            d_h = adj.apply(&d_z.dot(&layers[l].weight.t()));
        }
        grads.push(DenseLayer { weight, bias });
    }
    grads.reverse();
    grads
}

/// Runs the encoder; fails if any activation is non-finite.
pub fn encode_nodes(g: &Graph, x: &AugmentedFeatures, params: &ModelParams) -> Result<Array2<f64>> {
    if x.n() != g.n() {
        return Err(CelpError::FeatureRows { expected: g.n(), found: x.n() });
    }
    let expected = params.encoder.first().map_or(x.width(), |l| l.weight.nrows());
    if expected != x.width() {
        return Err(CelpError::DimensionMismatch { expected, found: x.width() });
    }
    let adj = NormalizedAdjacency::from_graph(g);
    let cache = encoder_forward(&adj, &x.matrix, &params.encoder);
    let h = cache.outputs.last().cloned().unwrap_or_else(|| x.matrix.clone());
    if h.iter().any(|v| !v.is_finite()) {
        return Err(CelpError::NonFinite("encoder produced a non-finite activation".into()));
    }
    Ok(h)
}
