use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{DenseLayer, HeadParams, ModelParams};
use crate::error::{CelpError, Result};
use crate::features::PairFeature;

/// How a [`PairFeature`] is laid out as head input. Column 0 is always the
/// embedding inner product; with `local` off it is the only column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadLayout {
    pub local: bool,
    pub de_len: usize,
    pub path_len: usize,
    /// Community count; labels enter one-hot.
    pub k: usize,
}

impl HeadLayout {
    pub fn width(&self) -> usize {
        if self.local {
            1 + self.de_len + self.path_len + 2 * self.k + 1
        } else {
            1
        }
    }

    /// Writes the (unnormalized) head input of a symmetrized feature.
    pub fn write(&self, f: &PairFeature, out: &mut [f64]) -> Result<()> {
        if out.len() != self.width() {
            return Err(CelpError::DimensionMismatch { expected: self.width(), found: out.len() });
        }
        out[0] = f.emb_dot;
        if !self.local {
            return Ok(());
        }
        if f.de.len() != self.de_len {
            return Err(CelpError::DimensionMismatch { expected: self.de_len, found: f.de.len() });
        }
        if f.path.len() != self.path_len {
            return Err(CelpError::DimensionMismatch { expected: self.path_len, found: f.path.len() });
        }
        let (a, b, spd) = f.com;
        if a >= self.k || b >= self.k {
            return Err(CelpError::InvalidParameter(format!("community label out of range for k = {}", self.k)));
        }
        let mut i = 1;
        out[i..i + self.de_len].copy_from_slice(&f.de);
        i += self.de_len;
        out[i..i + self.path_len].copy_from_slice(&f.path);
        i += self.path_len;
        out[i..i + 2 * self.k].fill(0.0);
        out[i + a] = 1.0;
        out[i + self.k + b] = 1.0;
        i += 2 * self.k;
        out[i] = 1.0 / (1.0 + spd as f64);
        Ok(())
    }
}

/// Per-column affine standardization `(x - shift) / scale`. Column 0 (the
/// embedding term) is never rescaled so its gradient reaches the encoder
/// unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureNormalizer {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl FeatureNormalizer {
    pub fn identity(width: usize) -> Self {
        FeatureNormalizer { shift: vec![0.0; width], scale: vec![1.0; width] }
    }

    pub fn fit(rows: ArrayView2<f64>) -> Self {
        let width = rows.ncols();
        let mut out = FeatureNormalizer::identity(width);
        if rows.nrows() == 0 {
            return out;
        }
        let mean = rows.mean_axis(Axis(0)).expect("nonempty");
        let std = rows.std_axis(Axis(0), 0.0);
        for j in 1..width {
            out.shift[j] = mean[j];
            out.scale[j] = if std[j] > 1e-12 { std[j] } else { 1.0 };
        }
        out
    }

    pub fn width(&self) -> usize {
        self.shift.len()
    }

    pub fn apply_row(&self, row: &mut [f64]) {
        for ((x, s), c) in row.iter_mut().zip(&self.shift).zip(&self.scale) {
            *x = (*x - s) / c;
        }
    }
}

/// Trained parameters plus what is needed to turn pair features into head inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkModel {
    pub params: ModelParams,
    pub layout: HeadLayout,
    pub normalizer: FeatureNormalizer,
}

impl LinkModel {
    /// Normalized head input for one feature (symmetrized first).
    pub fn head_input(&self, feat: &PairFeature) -> Result<Vec<f64>> {
        let mut row = vec![0.0; self.layout.width()];
        self.layout.write(&feat.symmetrized(), &mut row)?;
        self.normalizer.apply_row(&mut row);
        Ok(row)
    }

    pub fn logits(&self, inputs: &Array2<f64>) -> Result<Array1<f64>> {
        if inputs.ncols() != self.params.head_input_dim() {
            return Err(CelpError::DimensionMismatch {
                expected: self.params.head_input_dim(),
                found: inputs.ncols(),
            });
        }
        Ok(head_forward(inputs, &self.params.head).1)
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Edge probability for one pair feature.
pub fn score_pair(feat: &PairFeature, model: &LinkModel) -> Result<f64> {
    let row = model.head_input(feat)?;
    let z = Array2::from_shape_vec((1, row.len()), row).expect("row shape");
    Ok(sigmoid(model.logits(&z)?[0]))
}

/// Returns the hidden activations and the logits for a batch of inputs.
pub(crate) fn head_forward(z: &Array2<f64>, head: &HeadParams) -> (Array2<f64>, Array1<f64>) {
    let mut a = z.dot(&head.hidden.weight);
    a += &head.hidden.bias;
    a.mapv_inplace(f64::tanh);
    let mut logits = a.dot(&head.out_w);
    logits += head.out_b[0];
    (a, logits)
}

/// Head gradients and `dL/dz[:, 0]` (the embedding-term column).
pub(crate) fn head_backward(
    z: &Array2<f64>,
    act: &Array2<f64>,
    head: &HeadParams,
    d_logits: &Array1<f64>,
) -> (HeadParams, Array1<f64>) {
    let out_w = act.t().dot(d_logits);
    let out_b = Array1::from_elem(1, d_logits.sum());
    // dL/dA = d_logits outer out_w, then through tanh
    let mut d_a = Array2::zeros(act.raw_dim());
    for (mut row, &g) in d_a.rows_mut().into_iter().zip(d_logits) {
        row.scaled_add(g, &head.out_w);
    }
    let d_pre = &d_a * &act.mapv(|t| 1.0 - t * t);
    let weight = z.t().dot(&d_pre);
    let bias = d_pre.sum_axis(Axis(0));
    let d_z0 = d_pre.dot(&head.hidden.weight.row(0));
    (HeadParams { hidden: DenseLayer { weight, bias }, out_w, out_b }, d_z0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feature() -> PairFeature {
        PairFeature { emb_dot: 0.3, de: vec![1.0, 2.0, 3.0, 4.0], path: vec![0.5; 6], com: (1, 0, 2) }
    }

    fn layout() -> HeadLayout {
        HeadLayout { local: true, de_len: 4, path_len: 6, k: 2 }
    }

    fn zero_model() -> LinkModel {
        let mut params = ModelParams::init(2, 3, 1, layout().width(), 4, 0);
        params.head = params.zeros_like().head;
        LinkModel { params, layout: layout(), normalizer: FeatureNormalizer::identity(layout().width()) }
    }

    #[test]
    fn layout_width_and_write() {
        let l = layout();
        assert_eq!(l.width(), 1 + 4 + 6 + 4 + 1);
        let mut out = vec![0.0; l.width()];
        l.write(&feature().symmetrized(), &mut out).unwrap();
        assert_eq!(out[0], 0.3);
        assert_eq!(&out[1..5], &[1.0, 2.5, 2.5, 4.0]);
        assert_eq!(&out[11..15], &[1.0, 0.0, 0.0, 1.0]);
        assert!((out[15] - 1.0 / 3.0).abs() < 1e-15);
        let ablated = HeadLayout { local: false, ..l };
        assert_eq!(ablated.width(), 1);
    }

    #[test]
    fn zero_weights_give_half() {
        assert_eq!(score_pair(&feature(), &zero_model()).unwrap(), 0.5);
    }

    #[test]
    fn monotone_in_logit() {
        let mut m = zero_model();
        let mut last = 0.0;
        for b in [-3.0, -1.0, 0.0, 0.5, 4.0] {
            m.params.head.out_b[0] = b;
            let p = score_pair(&feature(), &m).unwrap();
            assert!(p > last);
            last = p;
        }
    }

    #[test]
    fn deterministic_and_order_invariant() {
        let mut m = zero_model();
        m.params = ModelParams::init(2, 3, 1, layout().width(), 4, 17);
        let f = feature();
        let mut swapped = f.clone();
        swapped.com = (0, 1, 2);
        swapped.de = vec![1.0, 3.0, 2.0, 4.0];
        let a = score_pair(&f, &m).unwrap();
        assert_eq!(a.to_bits(), score_pair(&f, &m).unwrap().to_bits());
        assert_eq!(a, score_pair(&swapped, &m).unwrap());
    }

    #[test]
    fn shape_mismatch_is_error() {
        let mut f = feature();
        f.path.pop();
        assert!(matches!(score_pair(&f, &zero_model()), Err(CelpError::DimensionMismatch { .. })));
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }

    #[test]
    fn normalizer_leaves_first_column() {
        let rows = ndarray::arr2(&[[5.0, 1.0, 2.0], [7.0, 3.0, 2.0]]);
        let n = FeatureNormalizer::fit(rows.view());
        let mut r = vec![5.0, 1.0, 2.0];
        n.apply_row(&mut r);
        assert_eq!(r, vec![5.0, -1.0, 0.0]);
    }
}
