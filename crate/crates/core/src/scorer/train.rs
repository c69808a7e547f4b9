use std::collections::BTreeSet;

use ndarray::{Array2, Axis};
use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use super::constraint::ConstraintMatrix;
use super::encoder::{encoder_forward, NormalizedAdjacency};
use super::head::{head_forward, sigmoid, FeatureNormalizer, HeadLayout, LinkModel};
use super::loss::LossReport;
use super::objective::Objective;
use super::ModelParams;
use crate::encoding::AugmentedFeatures;
use crate::error::{CelpError, Result};
use crate::eval::hit_rate_at_k;
use crate::features::{PairFeatureConfig, PairFeaturizer};
use crate::graph::{sample_non_edges, Pair};
use crate::rng::{derive_seed, stage_rng};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Pairs featurized per chunk when scoring.
const SCORE_CHUNK: usize = 512;

/// Upper bound on cached validation matrix entries (about 256 MB).
const VALID_CACHE_ENTRIES: usize = 32 << 20;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Sgd,
    Adam,
}

impl std::str::FromStr for OptimizerKind {
    type Err = CelpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            _ => Err(CelpError::InvalidParameter(format!("unknown optimizer `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScorerConfig {
    /// Encoder depth.
    pub layers: usize,
    /// Encoder width.
    pub hidden: usize,
    pub head_hidden: usize,
    pub alpha: f64,
    pub tau: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Anchor nodes sampled per step for the contrastive term.
    pub anchors: usize,
    pub optimizer: OptimizerKind,
    /// `k` of the validation HR@k used for model selection.
    pub eval_k: usize,
    pub eval_every: usize,
    /// Truncation radius of the proximity inside the constraint matrix.
    pub ppr_radius: usize,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig {
            layers: 2,
            hidden: 64,
            head_hidden: 32,
            alpha: 0.2,
            tau: 0.5,
            lr: 0.01,
            epochs: 50,
            batch_size: 512,
            anchors: 64,
            optimizer: OptimizerKind::Sgd,
            eval_k: 50,
            eval_every: 5,
            ppr_radius: 2,
        }
    }
}

impl ScorerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CelpError::InvalidParameter(m.into()));
        if self.hidden == 0 || self.head_hidden == 0 {
            return bad("hidden widths must be >= 1");
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be finite and >= 0");
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad("tau must be > 0");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be > 0");
        }
        if self.batch_size == 0 || self.eval_k == 0 || self.eval_every == 0 {
            return bad("batch_size, eval_k and eval_every must be >= 1");
        }
        if self.alpha > 0.0 && self.anchors < 2 {
            return bad("anchors must be >= 2 when alpha > 0");
        }
        Ok(())
    }
}

/// Everything the scorer reads besides the training pairs.
#[derive(Clone, Copy)]
pub struct ModelInputs<'a> {
    /// Its graph is the message-passing graph.
    pub featurizer: &'a PairFeaturizer,
    pub features: &'a AugmentedFeatures,
    pub constraint: Option<&'a ConstraintMatrix>,
    /// Include the local pair features in the head input; without them the
    /// head sees only the embedding inner product.
    pub local: bool,
}

impl ModelInputs<'_> {
    fn layout(&self) -> HeadLayout {
        let cfg = self.featurizer.config();
        HeadLayout { local: self.local, de_len: cfg.de_len(), path_len: cfg.path_len(), k: self.featurizer.partition().k }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean batch loss per epoch, measured before each step.
    pub loss_trace: Vec<LossReport>,
    pub best_epoch: usize,
    pub best_valid_hr: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: LinkModel,
    /// Final-layer embeddings of the best parameters on the training graph.
    pub embeddings: Array2<f64>,
    pub report: TrainReport,
}

impl TrainedModel {
    /// Edge probabilities for `pairs`; with `mask_target`, pairs that are
    /// edges of the featurizer graph are featurized without that edge.
    pub fn score(&self, featurizer: &PairFeaturizer, pairs: &[Pair], mask_target: bool) -> Result<Vec<f64>> {
        score_pairs(&self.model, featurizer, &self.embeddings, pairs, mask_target)
    }
}

pub(crate) fn score_pairs(
    model: &LinkModel,
    featurizer: &PairFeaturizer,
    embeddings: &Array2<f64>,
    pairs: &[Pair],
    mask_target: bool,
) -> Result<Vec<f64>> {
    let width = model.layout.width();
    let mut out = Vec::with_capacity(pairs.len());
    for chunk in pairs.chunks(SCORE_CHUNK) {
        let mut rows = Array2::zeros((chunk.len(), width));
        for (i, &(u, v)) in chunk.iter().enumerate() {
            let f = featurizer.pair_representation(u, v, Some(embeddings), mask_target)?;
            let row = model.head_input(&f)?;
            rows.row_mut(i).assign(&ndarray::ArrayView1::from(&row));
        }
        out.extend(model.logits(&rows)?.iter().map(|&z| sigmoid(z)));
    }
    Ok(out)
}

/// Raw (unnormalized) head inputs with column 0 left at zero.
fn structural_rows(inputs: &ModelInputs, layout: &HeadLayout, pairs: &[Pair], mask: bool) -> Result<Array2<f64>> {
    let mut rows = Array2::zeros((pairs.len(), layout.width()));
    if !layout.local {
        return Ok(rows);
    }
    for (i, &(u, v)) in pairs.iter().enumerate() {
        let f = inputs.featurizer.pair_representation(u, v, None, mask)?.symmetrized();
        layout.write(&f, rows.row_mut(i).as_slice_mut().expect("standard layout"))?;
    }
    Ok(rows)
}

/// Logits for pairs whose normalized structural rows are precomputed.
/// Monotone in the probability, so fine for ranking.
fn cached_logits(rows: &Array2<f64>, pairs: &[Pair], h: &Array2<f64>, params: &ModelParams) -> Vec<f64> {
    let mut z = rows.clone();
    for (i, &(u, v)) in pairs.iter().enumerate() {
        z[[i, 0]] = h.row(u).dot(&h.row(v));
    }
    head_forward(&z, &params.head).1.to_vec()
}

fn normalize_rows(rows: &mut Array2<f64>, norm: &FeatureNormalizer) {
    for mut r in rows.rows_mut() {
        norm.apply_row(r.as_slice_mut().expect("standard layout"));
    }
}

struct Adam {
    m: ModelParams,
    v: ModelParams,
    t: i32,
}

const ADAM_B1: f64 = 0.9;
const ADAM_B2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

fn step(params: &mut ModelParams, grad: &ModelParams, lr: f64, adam: Option<&mut Adam>) {
    match adam {
        None => {
            for (p, g) in params.tensors_mut().into_iter().zip(grad.tensors()) {
                for (x, d) in p.iter_mut().zip(g) {
                    *x -= lr * d;
                }
            }
        }
        Some(state) => {
            state.t += 1;
            let c1 = 1.0 - ADAM_B1.powi(state.t);
            let c2 = 1.0 - ADAM_B2.powi(state.t);
            let tensors = params.tensors_mut().into_iter().zip(grad.tensors());
            let moments = state.m.tensors_mut().into_iter().zip(state.v.tensors_mut());
            for ((p, g), (m, v)) in tensors.zip(moments) {
                for i in 0..p.len() {
                    m[i] = ADAM_B1 * m[i] + (1.0 - ADAM_B1) * g[i];
                    v[i] = ADAM_B2 * v[i] + (1.0 - ADAM_B2) * g[i] * g[i];
                    p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + ADAM_EPS);
                }
            }
        }
    }
}

/// Trains encoder and head on `positives` (edges of the featurizer graph,
/// featurized with the target edge masked) against one fresh uniform
/// non-edge per positive each epoch. Returns the parameters with the best
/// validation HR@k; without validation pairs, the final parameters.
pub fn train(
    inputs: &ModelInputs,
    positives: &[Pair],
    valid_pos: &[Pair],
    valid_neg: &[Pair],
    cfg: &ScorerConfig,
    seed: u64,
) -> Result<TrainedModel> {
    cfg.validate()?;
    if positives.is_empty() {
        return Err(CelpError::EmptyInput("no training positives".into()));
    }
    let fz = inputs.featurizer;
    let g = fz.graph();
    if inputs.features.n() != g.n() {
        return Err(CelpError::FeatureRows { expected: g.n(), found: inputs.features.n() });
    }
    if cfg.alpha > 0.0 && inputs.constraint.is_none() {
        return Err(CelpError::InvalidParameter("alpha > 0 needs a constraint matrix".into()));
    }
    let layout = inputs.layout();
    let adjacency = NormalizedAdjacency::from_graph(g);
    let x = &inputs.features.matrix;
    let mut rng = stage_rng(seed, "train");

    let mut pos_rows = structural_rows(inputs, &layout, positives, true)?;
    let normalizer = {
        let mut fit_rng = stage_rng(seed, "train.normalizer");
        let probe = sample_non_edges(g, positives.len(), &mut fit_rng);
        let probe_rows = structural_rows(inputs, &layout, &probe, false)?;
        let both = ndarray::concatenate(Axis(0), &[pos_rows.view(), probe_rows.view()]).expect("same width");
        FeatureNormalizer::fit(both.view())
    };
    normalize_rows(&mut pos_rows, &normalizer);

    let mut params = ModelParams::init(
        x.ncols(),
        cfg.hidden,
        cfg.layers,
        layout.width(),
        cfg.head_hidden,
        derive_seed(seed, "train.init"),
    );
    let mut adam = (cfg.optimizer == OptimizerKind::Adam)
        .then(|| Adam { m: params.zeros_like(), v: params.zeros_like(), t: 0 });

    let model_of = |params: &ModelParams| LinkModel {
        params: params.clone(),
        layout: layout.clone(),
        normalizer: normalizer.clone(),
    };
    let embed = |params: &ModelParams| -> Result<Array2<f64>> {
        let h = encoder_forward(&adjacency, x, &params.encoder).outputs.pop().unwrap_or_else(|| x.clone());
        if h.iter().any(|v| !v.is_finite()) {
            return Err(CelpError::NonFinite("encoder produced a non-finite activation".into()));
        }
        Ok(h)
    };
    // Validation rows do not depend on the parameters; keep them when they fit.
    let cache_valid = (valid_pos.len() + valid_neg.len()) * layout.width() <= VALID_CACHE_ENTRIES;
    let valid_rows = if cache_valid {
        let mut p = structural_rows(inputs, &layout, valid_pos, false)?;
        let mut q = structural_rows(inputs, &layout, valid_neg, false)?;
        normalize_rows(&mut p, &normalizer);
        normalize_rows(&mut q, &normalizer);
        Some((p, q))
    } else {
        None
    };
    let validate = |params: &ModelParams| -> Result<f64> {
        let h = embed(params)?;
        let (pos, neg) = match &valid_rows {
            Some((p, q)) => (cached_logits(p, valid_pos, &h, params), cached_logits(q, valid_neg, &h, params)),
            None => {
                let model = model_of(params);
                (
                    score_pairs(&model, fz, &h, valid_pos, false)?,
                    score_pairs(&model, fz, &h, valid_neg, false)?,
                )
            }
        };
        Ok(hit_rate_at_k(&pos, &neg, cfg.eval_k))
    };
    let has_valid = !valid_pos.is_empty() && !valid_neg.is_empty();

    let mut best: Option<(f64, usize, ModelParams)> = None;
    let mut trace = Vec::with_capacity(cfg.epochs);
    let n_pos = positives.len();
    for epoch in 0..cfg.epochs {
        let negatives = sample_non_edges(g, n_pos, &mut rng);
        let mut neg_rows = structural_rows(inputs, &layout, &negatives, false)?;
        normalize_rows(&mut neg_rows, &normalizer);
        let total = n_pos + negatives.len();
        let mut order: Vec<usize> = (0..total).collect();
        order.shuffle(&mut rng);

        let (mut ce, mut con, mut seen) = (0.0, 0.0, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            let mut pairs = Vec::with_capacity(batch.len());
            let mut labels = Vec::with_capacity(batch.len());
            let mut rows = Array2::zeros((batch.len(), layout.width()));
            for (r, &i) in batch.iter().enumerate() {
                if i < n_pos {
                    pairs.push(positives[i]);
                    labels.push(true);
                    rows.row_mut(r).assign(&pos_rows.row(i));
                } else {
                    pairs.push(negatives[i - n_pos]);
                    labels.push(false);
                    rows.row_mut(r).assign(&neg_rows.row(i - n_pos));
                }
            }
            let anchors: Vec<usize> = if cfg.alpha > 0.0 {
                let mut a = index::sample(&mut rng, g.n(), cfg.anchors.min(g.n())).into_vec();
                a.sort_unstable();
                a
            } else {
                Vec::new()
            };
            // the encoder must not see the positives it is scored on
            let held: BTreeSet<Pair> = pairs.iter().zip(&labels).filter(|(_, &y)| y).map(|(e, _)| *e).collect();
            let kept: Vec<Pair> = g.edges().filter(|e| !held.contains(e)).collect();
            let batch_adj = NormalizedAdjacency::from_graph(&g.with_edges(&kept)?);
            let objective = Objective {
                adjacency: &batch_adj,
                inputs: x,
                pairs: &pairs,
                rows: &rows,
                labels: &labels,
                constraint: inputs.constraint,
                anchors: &anchors,
                alpha: cfg.alpha,
                tau: cfg.tau,
            };
            let (report, grad) = objective.loss_and_grad(&params)?;
            let w = batch.len();
            ce += report.ce * w as f64;
            con += report.con * w as f64;
            seen += w;
            step(&mut params, &grad, cfg.lr, adam.as_mut());
            if !params.is_finite() {
                return Err(CelpError::NonFinite(format!("parameters diverged in epoch {epoch}")));
            }
        }
        trace.push(LossReport::new(ce / seen as f64, con / seen as f64, cfg.alpha));

        let last = epoch + 1 == cfg.epochs;
        if has_valid && ((epoch + 1) % cfg.eval_every == 0 || last) {
            let hr = validate(&params)?;
            if best.as_ref().is_none_or(|(b, _, _)| hr > *b) {
                best = Some((hr, epoch, params.clone()));
            }
        }
    }

    let (best_valid_hr, best_epoch, params) = match best {
        Some((hr, e, p)) => (Some(hr), e, p),
        None => (None, cfg.epochs.saturating_sub(1), params),
    };
    let embeddings = embed(&params)?;
    Ok(TrainedModel {
        model: model_of(&params),
        embeddings,
        report: TrainReport { loss_trace: trace, best_epoch, best_valid_hr },
    })
}

/// Serialized trained scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: ScorerConfig,
    pub feature_config: PairFeatureConfig,
    pub model: LinkModel,
}

impl Checkpoint {
    pub fn new(config: &ScorerConfig, feature_config: &PairFeatureConfig, model: &LinkModel) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            config: config.clone(),
            feature_config: feature_config.clone(),
            model: model.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(s)?;
        if c.version != CHECKPOINT_VERSION {
            return Err(CelpError::InvalidParameter(format!(
                "checkpoint version {} unsupported (expected {CHECKPOINT_VERSION})",
                c.version
            )));
        }
        Ok(c)
    }
}
