//! Community-constrained edge completion and confidence-based pruning.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::centrality::CentralityScores;
use crate::community::CommunityPartition;
use crate::error::{CelpError, Result};
use crate::graph::{canonical, floor_fraction, EdgeSplit, Graph, Pair};
use crate::scorer::{train, ModelInputs, ScorerConfig, TrainReport};

pub type ProbabilityMap = BTreeMap<Pair, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnhanceSettings {
    pub gamma: f64,
    pub eta: f64,
    pub top_m: usize,
}

impl Default for EnhanceSettings {
    fn default() -> Self {
        EnhanceSettings { gamma: 0.05, eta: 0.05, top_m: 100 }
    }
}

impl EnhanceSettings {
    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("gamma", self.gamma), ("eta", self.eta)] {
            if !(0.0..=1.0).contains(&x) {
                return Err(CelpError::InvalidParameter(format!("{name} must be in [0, 1], got {x}")));
            }
        }
        if self.top_m == 0 {
            return Err(CelpError::InvalidParameter("top_m must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnhancementPlan {
    pub cand: Vec<Pair>,
    pub added: Vec<Pair>,
    pub removed: Vec<Pair>,
    pub gamma: f64,
    pub eta: f64,
    pub top_m: usize,
}

/// Non-adjacent same-community pairs with at least one endpoint among the
/// `top_m` highest-scoring nodes (ties to the smaller id). Sorted.
pub fn candidate_edges(
    g: &Graph,
    scores: &CentralityScores,
    top_m: usize,
    p: &CommunityPartition,
) -> Result<Vec<Pair>> {
    if top_m == 0 {
        return Err(CelpError::InvalidParameter("top_m must be >= 1".into()));
    }
    if scores.scores.len() != g.n() || p.n() != g.n() {
        return Err(CelpError::DimensionMismatch { expected: g.n(), found: scores.scores.len().min(p.n()) });
    }
    let top = &scores.ranking()[..top_m.min(g.n())];
    let mut out = BTreeSet::new();
    for &u in top {
        for &w in &p.members[p.community_of(u)] {
            if w != u && !g.has_edge(u, w) {
                out.insert(canonical(u, w));
            }
        }
    }
    Ok(out.into_iter().collect())
}

fn lookup(prob: &ProbabilityMap, e: Pair) -> Result<f64> {
    let p = *prob.get(&e).ok_or(CelpError::MissingProbability(e.0, e.1))?;
    if !(0.0..=1.0).contains(&p) {
        return Err(CelpError::InvalidParameter(format!("probability {p} for {e:?} outside [0, 1]")));
    }
    Ok(p)
}

/// Adds the top `floor(gamma |cand|)` candidates and removes the bottom
/// `floor(eta |E|)` edges of `g` by probability. Ties go to the
/// lexicographically smaller pair in both directions.
pub fn enhance_graph(
    g: &Graph,
    cand: &[Pair],
    prob: &ProbabilityMap,
    settings: &EnhanceSettings,
) -> Result<(Graph, EnhancementPlan)> {
    settings.validate()?;
    let mut scored_cand = Vec::with_capacity(cand.len());
    for &(u, v) in cand {
        let e = canonical(u, v);
        if g.has_edge(e.0, e.1) {
            return Err(CelpError::InvalidParameter(format!("candidate {e:?} is already an edge")));
        }
        scored_cand.push((lookup(prob, e)?, e));
    }
    scored_cand.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored_cand.dedup_by_key(|x| x.1);
    let n_add = floor_fraction(settings.gamma, cand.len()).min(scored_cand.len());
    let mut added: Vec<Pair> = scored_cand[..n_add].iter().map(|x| x.1).collect();

    let mut scored_edges = g.edges().map(|e| Ok((lookup(prob, e)?, e))).collect::<Result<Vec<_>>>()?;
    scored_edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let n_rm = floor_fraction(settings.eta, g.edge_count());
    let mut removed: Vec<Pair> = scored_edges[..n_rm].iter().map(|x| x.1).collect();

    let gone: BTreeSet<Pair> = removed.iter().copied().collect();
    let mut edges: Vec<Pair> = g.edges().filter(|e| !gone.contains(e)).collect();
    edges.extend(&added);
    let out = g.with_edges(&edges)?;
    added.sort_unstable();
    removed.sort_unstable();
    Ok((
        out,
        EnhancementPlan {
            cand: cand.iter().map(|&(u, v)| canonical(u, v)).collect(),
            added,
            removed,
            gamma: settings.gamma,
            eta: settings.eta,
            top_m: settings.top_m,
        },
    ))
}

#[derive(Debug, Clone)]
pub struct Confidence {
    pub probs: ProbabilityMap,
    pub report: TrainReport,
}

/// Trains the scorer on the unenhanced training graph (the featurizer's
/// graph) and scores every candidate and every existing edge. Existing
/// edges are featurized with the edge itself masked, as during training.
pub fn pretrain_confidence(
    inputs: &ModelInputs,
    split: &EdgeSplit,
    cand: &[Pair],
    cfg: &ScorerConfig,
    seed: u64,
) -> Result<Confidence> {
    let g = inputs.featurizer.graph();
    let trained = train(inputs, &split.train_edges, &split.valid_edges, &split.valid_neg, cfg, seed)?;
    let edges: Vec<Pair> = g.edges().collect();
    let mut probs = ProbabilityMap::new();
    for (e, p) in edges.iter().zip(trained.score(inputs.featurizer, &edges, true)?) {
        probs.insert(*e, p);
    }
    for (e, p) in cand.iter().zip(trained.score(inputs.featurizer, cand, false)?) {
        probs.insert(canonical(e.0, e.1), p);
    }
    Ok(Confidence { probs, report: trained.report })
}
