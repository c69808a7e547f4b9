use ndarray::{Array1, Array2};

use super::constraint::ConstraintMatrix;
use super::encoder::{encoder_backward, encoder_forward, NormalizedAdjacency};
use super::head::{head_backward, head_forward};
use super::loss::{ce_with_grad, con_with_grad, LossReport};
use super::ModelParams;
use crate::error::{CelpError, Result};
use crate::graph::Pair;

/// `L = L_CE + alpha * L_con` on a fixed batch.
///
/// `rows` holds the normalized head inputs of the batch pairs; only column
/// 0 (the embedding inner product) depends on the parameters and is
/// overwritten on each evaluation.
pub struct Objective<'a> {
    pub adjacency: &'a NormalizedAdjacency,
    pub inputs: &'a Array2<f64>,
    pub pairs: &'a [Pair],
    pub rows: &'a Array2<f64>,
    pub labels: &'a [bool],
    pub constraint: Option<&'a ConstraintMatrix>,
    pub anchors: &'a [usize],
    pub alpha: f64,
    pub tau: f64,
}

impl Objective<'_> {
    pub fn loss(&self, params: &ModelParams) -> Result<LossReport> {
        Ok(self.run(params, false)?.0)
    }

    /// Loss and analytic gradient for every parameter tensor.
    pub fn loss_and_grad(&self, params: &ModelParams) -> Result<(LossReport, ModelParams)> {
        let (report, grad) = self.run(params, true)?;
        Ok((report, grad.expect("requested")))
    }

    fn run(&self, params: &ModelParams, want_grad: bool) -> Result<(LossReport, Option<ModelParams>)> {
        if self.pairs.len() != self.labels.len() || self.pairs.len() != self.rows.nrows() {
            return Err(CelpError::DimensionMismatch { expected: self.pairs.len(), found: self.labels.len() });
        }
        if self.rows.ncols() != params.head_input_dim() {
            return Err(CelpError::DimensionMismatch { expected: params.head_input_dim(), found: self.rows.ncols() });
        }
        let cache = encoder_forward(self.adjacency, self.inputs, &params.encoder);
        let h = cache.outputs.last().unwrap_or(self.inputs);

        let mut z = self.rows.clone();
        for (i, &(u, v)) in self.pairs.iter().enumerate() {
            z[[i, 0]] = h.row(u).dot(&h.row(v));
        }
        let (act, logits) = head_forward(&z, &params.head);
        let (ce, d_logits) = ce_with_grad(&logits, self.labels);

        let use_con = self.alpha != 0.0;
        let (con, d_h_con) = match (use_con, self.constraint) {
            (true, Some(m)) => con_with_grad(h, m, self.anchors, self.tau, want_grad)?,
            _ => (0.0, None),
        };
        let report = LossReport::new(ce, con, self.alpha);
        if !report.total.is_finite() {
            return Err(CelpError::NonFinite(format!("training loss (ce {ce}, con {con})")));
        }
        if !want_grad {
            return Ok((report, None));
        }

        let (head_grad, d_z0) = head_backward(&z, &act, &params.head, &d_logits);
        let mut d_h = d_h_con.map(|g| g * self.alpha).unwrap_or_else(|| Array2::zeros(h.raw_dim()));
        for (&(u, v), &g) in self.pairs.iter().zip(&d_z0) {
            if g == 0.0 {
                continue;
            }
            let hu: Array1<f64> = h.row(u).to_owned();
            let hv: Array1<f64> = h.row(v).to_owned();
            d_h.row_mut(u).scaled_add(g, &hv);
            d_h.row_mut(v).scaled_add(g, &hu);
        }
        let encoder = if params.encoder.is_empty() {
            Vec::new()
        } else {
            encoder_backward(self.adjacency, &cache, &params.encoder, d_h)
        };
        Ok((report, Some(ModelParams { encoder, head: head_grad })))
    }
}
