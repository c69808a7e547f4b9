use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::constraint::ConstraintMatrix;
use super::head::sigmoid;
use crate::error::{CelpError, Result};

/// Probability clamp used inside the cross-entropy.
pub const PROB_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub ce: f64,
    pub con: f64,
    pub total: f64,
    pub alpha: f64,
}

impl LossReport {
    pub fn new(ce: f64, con: f64, alpha: f64) -> Self {
        LossReport { ce, con, total: ce + alpha * con, alpha }
    }
}

/// Mean binary cross-entropy with predictions clamped to `[eps, 1 - eps]`.
pub fn loss_ce(preds: &[f64], labels: &[bool]) -> Result<f64> {
    if preds.len() != labels.len() {
        return Err(CelpError::DimensionMismatch { expected: preds.len(), found: labels.len() });
    }
    if preds.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = preds
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
            if y {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(sum / preds.len() as f64)
}

/// Cross-entropy of `sigmoid(logits)` and its gradient w.r.t. the logits.
/// Inside the clamp the gradient is `(p - y) / N`; where the clamp is
/// active it is zero.
pub(crate) fn ce_with_grad(logits: &Array1<f64>, labels: &[bool]) -> (f64, Array1<f64>) {
    let n = logits.len().max(1) as f64;
    let mut loss = 0.0;
    let mut grad = Array1::zeros(logits.len());
    for (i, (&z, &y)) in logits.iter().zip(labels).enumerate() {
        let p = sigmoid(z);
        let pc = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
        loss -= if y { pc.ln() } else { (1.0 - pc).ln() };
        if pc == p {
            grad[i] = (p - if y { 1.0 } else { 0.0 }) / n;
        }
    }
    (loss / n, grad)
}

struct CosineBlock {
    norms: Vec<f64>,
    /// `cos(h_a, h_b)` over anchor positions.
    cos: Array2<f64>,
}

fn cosines(h: &Array2<f64>, anchors: &[usize]) -> Result<CosineBlock> {
    let mut norms = Vec::with_capacity(anchors.len());
    for &a in anchors {
        if a >= h.nrows() {
            return Err(CelpError::NodeOutOfRange { node: a, n: h.nrows() });
        }
        let nrm = h.row(a).dot(&h.row(a)).sqrt();
        if nrm == 0.0 {
            return Err(CelpError::ZeroNormEmbedding(a));
        }
        norms.push(nrm);
    }
    let b = anchors.len();
    let cos = Array2::from_shape_fn((b, b), |(i, j)| {
        h.row(anchors[i]).dot(&h.row(anchors[j])) / (norms[i] * norms[j])
    });
    Ok(CosineBlock { norms, cos })
}

/// Contrastive community loss over one anchor batch:
/// `-sum_{i != j} M_ij [cos_ij / tau - log sum_{k != i} exp(cos_ik / tau)]`.
pub fn loss_con(h: &Array2<f64>, m: &ConstraintMatrix, anchors: &[usize], tau: f64) -> Result<f64> {
    Ok(con_with_grad(h, m, anchors, tau, false)?.0)
}

/// Loss value and, when `want_grad`, `dL/dH` (zero outside the anchors).
pub(crate) fn con_with_grad(
    h: &Array2<f64>,
    m: &ConstraintMatrix,
    anchors: &[usize],
    tau: f64,
    want_grad: bool,
) -> Result<(f64, Option<Array2<f64>>)> {
    if tau.is_nan() || tau <= 0.0 {
        return Err(CelpError::InvalidParameter(format!("tau must be > 0, got {tau}")));
    }
    if h.nrows() != m.n {
        return Err(CelpError::DimensionMismatch { expected: m.n, found: h.nrows() });
    }
    let b = anchors.len();
    let weights = Array2::from_shape_fn((b, b), |(i, j)| if i == j { 0.0 } else { m.get(anchors[i], anchors[j]) });
    if b < 2 || weights.iter().all(|&w| w == 0.0) {
        return Ok((0.0, want_grad.then(|| Array2::zeros(h.raw_dim()))));
    }
    let CosineBlock { norms, cos } = cosines(h, anchors)?;
    let mut loss = 0.0;
    // dL/dcos, filled row by row
    let mut d_cos = Array2::<f64>::zeros((b, b));
    for i in 0..b {
        let mass: f64 = weights.row(i).sum();
        if mass == 0.0 {
            continue;
        }
        let top = (0..b).filter(|&k| k != i).map(|k| cos[[i, k]] / tau).fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = (0..b).filter(|&k| k != i).map(|k| (cos[[i, k]] / tau - top).exp()).sum();
        let log_z = top + z.ln();
        for j in 0..b {
            if j == i {
                continue;
            }
            let w = weights[[i, j]];
            loss -= w * (cos[[i, j]] / tau - log_z);
            let soft = (cos[[i, j]] / tau - log_z).exp();
            d_cos[[i, j]] = (mass * soft - w) / tau;
        }
    }
    if !loss.is_finite() {
        return Err(CelpError::NonFinite("contrastive loss".into()));
    }
    if !want_grad {
        return Ok((loss, None));
    }
    let mut grad = Array2::zeros(h.raw_dim());
    for i in 0..b {
        for j in 0..b {
            let g = d_cos[[i, j]];
            if i == j || g == 0.0 {
                continue;
            }
            let (a, c) = (anchors[i], anchors[j]);
            let inv = 1.0 / (norms[i] * norms[j]);
            // d cos / d h_a = h_c / (|a||c|) - cos h_a / |a|^2, and symmetrically for h_c
            let ha = h.row(a).to_owned();
            let hc = h.row(c).to_owned();
            let cij = cos[[i, j]];
            grad.row_mut(a).scaled_add(g * inv, &hc);
            grad.row_mut(a).scaled_add(-g * cij / (norms[i] * norms[i]), &ha);
            grad.row_mut(c).scaled_add(g * inv, &ha);
            grad.row_mut(c).scaled_add(-g * cij / (norms[j] * norms[j]), &hc);
        }
    }
    Ok((loss, Some(grad)))
}
