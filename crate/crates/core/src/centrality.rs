//! Node-importance scores and community center selection.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::community::CommunityPartition;
use crate::error::{CelpError, Result};
use crate::graph::{bfs_distances, Graph, NodeId};

pub const DEFAULT_DAMPING: f64 = 0.85;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CentralityKind {
    Degree,
    Betweenness,
    Closeness,
    #[default]
    Pagerank,
}

impl std::str::FromStr for CentralityKind {
    type Err = CelpError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "degree" => Ok(CentralityKind::Degree),
            "betweenness" => Ok(CentralityKind::Betweenness),
            "closeness" => Ok(CentralityKind::Closeness),
            "pagerank" => Ok(CentralityKind::Pagerank),
            _ => Err(CelpError::InvalidParameter(format!("unknown centrality `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityScores {
    pub kind: CentralityKind,
    pub scores: Vec<f64>,
}

impl CentralityScores {
    /// Node ids ordered by descending score, ties by smaller id.
    pub fn ranking(&self) -> Vec<NodeId> {
        let mut order: Vec<NodeId> = (0..self.scores.len()).collect();
        order.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]).then(a.cmp(&b)));
        order
    }
}

/// PageRank by power iteration on the reciprocal-edge digraph:
/// `PR(v) = (1 - a)/N + a * sum_{u in N(v)} PR(u)/d(u)`. The mass of
/// isolated nodes is spread uniformly every iteration. Converged once the L1
/// change drops below `tol`.
pub fn pagerank(g: &Graph, damping: f64, tol: f64, max_iter: usize) -> Result<CentralityScores> {
    let n = g.n();
    if n == 0 {
        return Err(CelpError::EmptyInput("pagerank on a graph with no nodes".into()));
    }
    if !(damping > 0.0 && damping < 1.0) {
        return Err(CelpError::InvalidParameter(format!("damping {damping} not in (0, 1)")));
    }
    let nf = n as f64;
    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let dangling: f64 = (0..n).filter(|&v| g.degree(v) == 0).map(|v| rank[v]).sum();
        let base = (1.0 - damping) / nf + damping * dangling / nf;
        for (v, slot) in next.iter_mut().enumerate() {
            let inflow: f64 = g.neighbors(v).iter().map(|&u| rank[u] / g.degree(u) as f64).sum();
            *slot = base + damping * inflow;
        }
        // renormalize away round-off drift
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        residual = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if residual < tol {
            return Ok(CentralityScores { kind: CentralityKind::Pagerank, scores: rank });
        }
    }
    Err(CelpError::NotConverged { iterations: max_iter, residual })
}

pub fn centrality(g: &Graph, kind: CentralityKind) -> Result<CentralityScores> {
    let scores = match kind {
        CentralityKind::Pagerank => return pagerank(g, DEFAULT_DAMPING, DEFAULT_TOL, DEFAULT_MAX_ITER),
        CentralityKind::Degree => degree_centrality(g),
        CentralityKind::Betweenness => betweenness(g),
        CentralityKind::Closeness => closeness(g),
    };
    Ok(CentralityScores { kind, scores })
}

fn degree_centrality(g: &Graph) -> Vec<f64> {
    let n = g.n();
    if n <= 1 {
        return vec![0.0; n];
    }
    (0..n).map(|v| g.degree(v) as f64 / (n - 1) as f64).collect()
}

/// Brandes' exact betweenness, normalized by the `(n-1)(n-2)/2` node pairs
/// that exclude the node itself.
fn betweenness(g: &Graph) -> Vec<f64> {
    let n = g.n();
    let mut bc = vec![0.0; n];
    if n <= 2 {
        return bc;
    }
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![usize::MAX; n];
    let mut delta = vec![0.0f64; n];
    let mut stack = Vec::with_capacity(n);
    let mut queue = VecDeque::with_capacity(n);
    for s in 0..n {
        sigma.iter_mut().for_each(|x| *x = 0.0);
        dist.iter_mut().for_each(|x| *x = usize::MAX);
        delta.iter_mut().for_each(|x| *x = 0.0);
        stack.clear();
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in g.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                }
            }
        }
        while let Some(w) = stack.pop() {
            for &v in g.neighbors(w) {
                if dist[v] != usize::MAX && dist[v] + 1 == dist[w] {
                    delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
                }
            }
            if w != s {
                bc[w] += delta[w];
            }
        }
    }
    // every unordered pair was counted from both ends
    let norm = ((n - 1) * (n - 2)) as f64;
    bc.iter_mut().for_each(|x| *x /= norm);
    bc
}

/// Component-scaled closeness: `((r-1)/sum_d) * ((r-1)/(n-1))` where `r`
/// counts the nodes reachable from `v` (itself included).
fn closeness(g: &Graph) -> Vec<f64> {
    let n = g.n();
    if n <= 1 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|v| {
            let d = bfs_distances(g, v).expect("node in range");
            let (reach, total) = d
                .dist
                .iter()
                .filter(|&&x| x < n)
                .fold((0usize, 0usize), |(r, t), &x| (r + 1, t + x));
            if total == 0 {
                0.0
            } else {
                let r1 = (reach - 1) as f64;
                (r1 / total as f64) * (r1 / (n - 1) as f64)
            }
        })
        .collect()
}

/// Fills `centers[k]` with the top-scoring member of each community
/// (ties to the smaller id).
pub fn community_centers(
    g: &Graph,
    p: &CommunityPartition,
    scores: &CentralityScores,
) -> Result<CommunityPartition> {
    if scores.scores.len() != g.n() || p.n() != g.n() {
        return Err(CelpError::DimensionMismatch { expected: g.n(), found: scores.scores.len() });
    }
    let mut centers = Vec::with_capacity(p.k);
    for (c, mem) in p.members.iter().enumerate() {
        let best = mem
            .iter()
            .copied()
            .reduce(|a, b| match scores.scores[b].total_cmp(&scores.scores[a]) {
                std::cmp::Ordering::Greater => b,
                std::cmp::Ordering::Equal if b < a => b,
                _ => a,
            })
            .ok_or_else(|| CelpError::InvalidParameter(format!("community {c} is empty")))?;
        centers.push(best);
    }
    let mut out = p.clone();
    out.centers = Some(centers);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;

    fn path3() -> Graph {
        build_graph(&[(0, 1), (1, 2)], 3, None).unwrap()
    }

    fn star() -> Graph {
        build_graph(&[(0, 1), (0, 2), (0, 3), (0, 4)], 5, None).unwrap()
    }

    /// Dense power iteration on the explicit Google matrix.
    fn dense_pagerank(g: &Graph, a: f64) -> Vec<f64> {
        let n = g.n();
        let mut m = vec![vec![0.0; n]; n];
        for u in 0..n {
            for v in 0..n {
                m[v][u] = if g.degree(u) == 0 {
                    1.0 / n as f64
                } else if g.has_edge(u, v) {
                    1.0 / g.degree(u) as f64
                } else {
                    0.0
                };
            }
        }
        let mut r = vec![1.0 / n as f64; n];
        for _ in 0..10_000 {
            let next: Vec<f64> = (0..n)
                .map(|v| (1.0 - a) / n as f64 + a * (0..n).map(|u| m[v][u] * r[u]).sum::<f64>())
                .collect();
            let diff: f64 = next.iter().zip(&r).map(|(x, y)| (x - y).abs()).sum();
            r = next;
            if diff < 1e-15 {
                break;
            }
        }
        r
    }

    #[test]
    fn pagerank_cycle_uniform() {
        let g = build_graph(&[(0, 1), (1, 2), (0, 2)], 3, None).unwrap();
        let pr = pagerank(&g, 0.85, 1e-12, 500).unwrap();
        for x in pr.scores {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pagerank_path_matches_dense_oracle() {
        let g = path3();
        let pr = pagerank(&g, 0.85, 1e-14, 1000).unwrap();
        let oracle = dense_pagerank(&g, 0.85);
        for (a, b) in pr.scores.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        assert!(pr.scores[1] > pr.scores[0] && pr.scores[1] > pr.scores[2]);
    }

    #[test]
    fn pagerank_dangling_mass() {
        let g = build_graph(&[(0, 1)], 3, None).unwrap();
        let pr = pagerank(&g, 0.85, 1e-12, 500).unwrap();
        let oracle = dense_pagerank(&g, 0.85);
        assert!((pr.scores.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (a, b) in pr.scores.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn pagerank_errors() {
        assert!(matches!(
            pagerank(&star(), 0.85, 1e-30, 3),
            Err(CelpError::NotConverged { iterations: 3, .. })
        ));
        assert!(pagerank(&star(), 1.0, 1e-10, 10).is_err());
    }

    #[test]
    fn betweenness_small_cases() {
        let b = centrality(&path3(), CentralityKind::Betweenness).unwrap().scores;
        assert_eq!(b, vec![0.0, 1.0, 0.0]);
        let tri = build_graph(&[(0, 1), (1, 2), (0, 2)], 3, None).unwrap();
        assert_eq!(centrality(&tri, CentralityKind::Betweenness).unwrap().scores, vec![0.0; 3]);
    }

    #[test]
    fn degree_and_closeness() {
        let d = centrality(&star(), CentralityKind::Degree).unwrap().scores;
        assert_eq!(d, vec![1.0, 0.25, 0.25, 0.25, 0.25]);
        let c = centrality(&path3(), CentralityKind::Closeness).unwrap().scores;
        assert!((c[1] - 1.0).abs() < 1e-15);
        assert!((c[0] - 2.0 / 3.0).abs() < 1e-15);
        // disconnected: edge component scaled by 1/(n-1)
        let g = build_graph(&[(0, 1)], 3, None).unwrap();
        let c = centrality(&g, CentralityKind::Closeness).unwrap().scores;
        assert_eq!(c, vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn centers_star_singleton_and_ties() {
        let g = star();
        let p = CommunityPartition::from_assignment(1, vec![0; 5]).unwrap();
        let pr = pagerank(&g, 0.85, 1e-12, 500).unwrap();
        assert_eq!(community_centers(&g, &p, &pr).unwrap().centers, Some(vec![0]));

        let g = build_graph(&[(0, 1)], 8, None).unwrap();
        let mut labels = vec![0; 8];
        labels[7] = 1;
        let p = CommunityPartition::from_assignment(2, labels).unwrap();
        let flat = CentralityScores { kind: CentralityKind::Degree, scores: vec![0.5; 8] };
        let p = community_centers(&g, &p, &flat).unwrap();
        assert_eq!(p.centers, Some(vec![0, 7]));
        p.validate().unwrap();
    }

    #[test]
    fn ranking_ties_by_id() {
        let s = CentralityScores { kind: CentralityKind::Degree, scores: vec![0.1, 0.3, 0.3, 0.2] };
        assert_eq!(s.ranking(), vec![1, 2, 3, 0]);
    }
}
