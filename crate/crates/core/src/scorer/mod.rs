//! Node encoder, pair-scoring head, composite loss and training.
//!
//! Forward model:
//!
//! ```text
//! H_0 = x_hat
//! H_{l+1} = tanh(A_norm H_l W_l + b_l)            A_norm = D~^-1/2 (A + I) D~^-1/2
//! z(u,v) = normalize([H_u . H_v | f | g | onehot(s_a) | onehot(s_b) | 1/(1+spd)])
//! logit = w_o . tanh(W_h^T z + b_h) + b_o,   p = sigmoid(logit)
//! ```
//!
//! The training objective is `L = L_CE + alpha * L_con` with gradients
//! derived by hand for every tensor (see [`Objective`]).

mod constraint;
mod encoder;
mod head;
mod loss;
mod objective;
mod train;

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::rng_from_seed;

pub use constraint::{build_constraint, ConstraintMatrix};
pub use encoder::{encode_nodes, NormalizedAdjacency};
pub use head::{score_pair, FeatureNormalizer, HeadLayout, LinkModel};
pub use loss::{loss_ce, loss_con, LossReport, PROB_EPS};
pub use objective::Objective;
pub use train::{
    train, Checkpoint, ModelInputs, OptimizerKind, ScorerConfig, TrainReport, TrainedModel,
    CHECKPOINT_VERSION,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// `in x out`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl DenseLayer {
    fn glorot<R: Rng>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        DenseLayer {
            weight: Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-limit..=limit)),
            bias: Array1::zeros(fan_out),
        }
    }

    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        DenseLayer { weight: Array2::zeros((fan_in, fan_out)), bias: Array1::zeros(fan_out) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadParams {
    pub hidden: DenseLayer,
    pub out_w: Array1<f64>,
    /// Single output bias, kept as a length-1 tensor.
    pub out_b: Array1<f64>,
}

/// Encoder layers followed by the pair head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub encoder: Vec<DenseLayer>,
    pub head: HeadParams,
}

impl ModelParams {
    /// Glorot-uniform weights and zero biases, deterministic in `seed`.
    pub fn init(
        input_dim: usize,
        hidden: usize,
        layers: usize,
        head_input: usize,
        head_hidden: usize,
        seed: u64,
    ) -> Self {
        let mut rng = rng_from_seed(seed);
        let mut encoder = Vec::with_capacity(layers);
        let mut width = input_dim;
        for _ in 0..layers {
            encoder.push(DenseLayer::glorot(width, hidden, &mut rng));
            width = hidden;
        }
        let hidden_layer = DenseLayer::glorot(head_input, head_hidden, &mut rng);
        let limit = (6.0 / (head_hidden + 1) as f64).sqrt();
        let out_w = Array1::from_shape_simple_fn(head_hidden, || rng.random_range(-limit..=limit));
        ModelParams {
            encoder,
            head: HeadParams { hidden: hidden_layer, out_w, out_b: Array1::zeros(1) },
        }
    }

    pub fn zeros_like(&self) -> Self {
        ModelParams {
            encoder: self.encoder.iter().map(|l| DenseLayer::zeros(l.weight.nrows(), l.weight.ncols())).collect(),
            head: HeadParams {
                hidden: DenseLayer::zeros(self.head.hidden.weight.nrows(), self.head.hidden.weight.ncols()),
                out_w: Array1::zeros(self.head.out_w.len()),
                out_b: Array1::zeros(1),
            },
        }
    }

    /// Width of the final node embedding.
    pub fn embedding_dim(&self) -> usize {
        self.encoder.last().map_or(0, |l| l.weight.ncols())
    }

    pub fn head_input_dim(&self) -> usize {
        self.head.hidden.weight.nrows()
    }

    pub fn tensor_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for i in 0..self.encoder.len() {
            names.push(format!("encoder.{i}.weight"));
            names.push(format!("encoder.{i}.bias"));
        }
        names.extend(["head.hidden.weight", "head.hidden.bias", "head.out.weight", "head.out.bias"].map(String::from));
        names
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut t: Vec<&[f64]> = Vec::new();
        for l in &self.encoder {
            t.push(l.weight.as_slice().expect("standard layout"));
            t.push(l.bias.as_slice().expect("standard layout"));
        }
        t.push(self.head.hidden.weight.as_slice().expect("standard layout"));
        t.push(self.head.hidden.bias.as_slice().expect("standard layout"));
        t.push(self.head.out_w.as_slice().expect("standard layout"));
        t.push(self.head.out_b.as_slice().expect("standard layout"));
        t
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t: Vec<&mut [f64]> = Vec::new();
        for l in &mut self.encoder {
            t.push(l.weight.as_slice_mut().expect("standard layout"));
            t.push(l.bias.as_slice_mut().expect("standard layout"));
        }
        let h = &mut self.head;
        t.push(h.hidden.weight.as_slice_mut().expect("standard layout"));
        t.push(h.hidden.bias.as_slice_mut().expect("standard layout"));
        t.push(h.out_w.as_slice_mut().expect("standard layout"));
        t.push(h.out_b.as_slice_mut().expect("standard layout"));
        t
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_deterministic_and_chained() {
        let a = ModelParams::init(5, 8, 3, 12, 4, 42);
        assert_eq!(a, ModelParams::init(5, 8, 3, 12, 4, 42));
        assert_ne!(a, ModelParams::init(5, 8, 3, 12, 4, 43));
        assert_eq!(a.encoder[0].weight.dim(), (5, 8));
        assert_eq!(a.encoder[2].weight.dim(), (8, 8));
        assert_eq!(a.head.hidden.weight.dim(), (12, 4));
        assert_eq!(a.tensors().len(), a.tensor_names().len());
        assert!(a.is_finite());
    }
}
