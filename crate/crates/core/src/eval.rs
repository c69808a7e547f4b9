//! Heuristic baselines, HR@k and multi-seed aggregation.

use serde::{Deserialize, Serialize};

use crate::error::{CelpError, Result};
use crate::graph::{Graph, NodeId, Pair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeuristicKind {
    Cn,
    Aa,
    Ra,
}

impl std::str::FromStr for HeuristicKind {
    type Err = CelpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cn" => Ok(HeuristicKind::Cn),
            "aa" => Ok(HeuristicKind::Aa),
            "ra" => Ok(HeuristicKind::Ra),
            _ => Err(CelpError::InvalidParameter(format!("unknown heuristic `{s}`"))),
        }
    }
}

fn common_neighbors(g: &Graph, u: NodeId, v: NodeId) -> Vec<NodeId> {
    let (a, b) = (g.neighbors(u), g.neighbors(v));
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// CN, Adamic-Adar or Resource Allocation score. Adamic-Adar terms with
/// degree <= 1 contribute 0.
pub fn heuristic_score(g: &Graph, u: NodeId, v: NodeId, kind: HeuristicKind) -> Result<f64> {
    g.check_node(u)?;
    g.check_node(v)?;
    let common = common_neighbors(g, u, v);
    Ok(match kind {
        HeuristicKind::Cn => common.len() as f64,
        HeuristicKind::Aa => common
            .iter()
            .map(|&w| {
                let d = g.degree(w);
                if d <= 1 {
                    0.0
                } else {
                    1.0 / (d as f64).ln()
                }
            })
            .sum(),
        HeuristicKind::Ra => common.iter().map(|&w| 1.0 / g.degree(w) as f64).sum(),
    })
}

pub fn heuristic_scores(g: &Graph, pairs: &[Pair], kind: HeuristicKind) -> Result<Vec<f64>> {
    pairs.iter().map(|&(u, v)| heuristic_score(g, u, v, kind)).collect()
}

/// Fraction of positives with fewer than `k` negatives scoring at least as
/// high. Ties count against the positive.
pub fn hit_rate_at_k(pos: &[f64], neg: &[f64], k: usize) -> f64 {
    if pos.is_empty() {
        return 0.0;
    }
    let mut sorted = neg.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let hits = pos
        .iter()
        .filter(|&&p| {
            let below = sorted.partition_point(|&x| x < p);
            sorted.len() - below < k
        })
        .count();
    hits as f64 / pos.len() as f64
}

/// Aggregate over independent runs. `std` is the population standard
/// deviation, so a single run has `std = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric: String,
    pub k: usize,
    pub mean: f64,
    pub std: f64,
    pub runs: Vec<f64>,
    pub config: serde_json::Value,
}

impl EvalReport {
    pub fn from_runs(k: usize, runs: Vec<f64>, config: serde_json::Value) -> Result<Self> {
        if runs.is_empty() {
            return Err(CelpError::EmptyInput("no runs to aggregate".into()));
        }
        let (mean, std) = mean_std(&runs);
        Ok(EvalReport { metric: format!("HR@{k}"), k, mean, std, runs, config })
    }
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Runs `run` once per seed and aggregates the scores.
pub fn evaluate<F>(k: usize, seeds: &[u64], config: serde_json::Value, mut run: F) -> Result<EvalReport>
where
    F: FnMut(u64) -> Result<f64>,
{
    let runs = seeds.iter().map(|&s| run(s)).collect::<Result<Vec<_>>>()?;
    EvalReport::from_runs(k, runs, config)
}

/// HR@k of a heuristic on fixed positive and negative pairs.
pub fn heuristic_hit_rate(g: &Graph, kind: HeuristicKind, pos: &[Pair], neg: &[Pair], k: usize) -> Result<f64> {
    let p = heuristic_scores(g, pos, kind)?;
    let n = heuristic_scores(g, neg, kind)?;
    Ok(hit_rate_at_k(&p, &n, k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    K,
    Gamma,
    Eta,
    Alpha,
    Layers,
}

impl std::str::FromStr for SweepAxis {
    type Err = CelpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "k" => Ok(SweepAxis::K),
            "gamma" => Ok(SweepAxis::Gamma),
            "eta" => Ok(SweepAxis::Eta),
            "alpha" => Ok(SweepAxis::Alpha),
            "layers" => Ok(SweepAxis::Layers),
            _ => Err(CelpError::InvalidParameter(format!("unknown sweep axis `{s}`"))),
        }
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepAxis::K => "k",
            SweepAxis::Gamma => "gamma",
            SweepAxis::Eta => "eta",
            SweepAxis::Alpha => "alpha",
            SweepAxis::Layers => "layers",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub report: EvalReport,
}

/// One report per value, in the given order.
pub fn sweep<F>(values: &[f64], mut run: F) -> Result<Vec<SweepPoint>>
where
    F: FnMut(f64) -> Result<EvalReport>,
{
    if values.is_empty() {
        return Err(CelpError::EmptyInput("sweep needs at least one value".into()));
    }
    values.iter().map(|&value| Ok(SweepPoint { value, report: run(value)? })).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;

    #[test]
    fn heuristic_examples() {
        let tri = build_graph(&[(0, 1), (1, 2), (0, 2)], 3, None).unwrap();
        assert_eq!(heuristic_score(&tri, 0, 1, HeuristicKind::Cn).unwrap(), 1.0);
        assert_eq!(heuristic_score(&tri, 0, 1, HeuristicKind::Ra).unwrap(), 0.5);
        assert!((heuristic_score(&tri, 0, 1, HeuristicKind::Aa).unwrap() - 1.0 / 2f64.ln()).abs() < 1e-12);
        let star = build_graph(&[(0, 1), (0, 2), (0, 3), (0, 4)], 5, None).unwrap();
        assert_eq!(heuristic_score(&star, 1, 2, HeuristicKind::Ra).unwrap(), 0.25);
        assert!((heuristic_score(&star, 1, 2, HeuristicKind::Aa).unwrap() - 0.7213475204444817).abs() < 1e-12);
        let two = build_graph(&[(0, 1), (2, 3)], 4, None).unwrap();
        for kind in [HeuristicKind::Cn, HeuristicKind::Aa, HeuristicKind::Ra] {
            assert_eq!(heuristic_score(&two, 0, 2, kind).unwrap(), 0.0);
        }
    }

    #[test]
    fn hit_rate_examples() {
        assert_eq!(hit_rate_at_k(&[0.9, 0.4], &[0.8, 0.5, 0.3], 2), 0.5);
        assert_eq!(hit_rate_at_k(&[5.0, 6.0], &[1.0, 2.0], 1), 1.0);
        assert_eq!(hit_rate_at_k(&[0.0], &[1.0, 2.0], 1), 0.0);
        // a tie counts against the positive
        assert_eq!(hit_rate_at_k(&[1.0], &[1.0], 1), 0.0);
    }

    #[test]
    fn report_statistics() {
        let r = EvalReport::from_runs(50, vec![0.5], serde_json::Value::Null).unwrap();
        assert_eq!((r.mean, r.std), (0.5, 0.0));
        let r = EvalReport::from_runs(50, vec![0.2, 0.4], serde_json::Value::Null).unwrap();
        assert!((r.mean - 0.3).abs() < 1e-15 && (r.std - 0.1).abs() < 1e-15);
        assert_eq!(r.metric, "HR@50");
        assert!(EvalReport::from_runs(1, vec![], serde_json::Value::Null).is_err());
    }

    #[test]
    fn sweep_requires_values() {
        assert!(sweep(&[], |_| unreachable!()).is_err());
        let pts = sweep(&[1.0, 2.0], |v| EvalReport::from_runs(1, vec![v], serde_json::Value::Null)).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[1].report.mean, 2.0);
    }
}
