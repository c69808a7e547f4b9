use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::community::CommunityPartition;
use crate::error::{CelpError, Result};
use crate::graph::Graph;

/// Sparse symmetric `M = (S S^T) . Pi_r`, one sorted row per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintMatrix {
    pub n: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl ConstraintMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.rows[i];
        row.binary_search_by_key(&j, |&(c, _)| c).map_or(0.0, |p| row[p].1)
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.n, self.n));
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                m[[i, j]] = w;
            }
        }
        m
    }

    /// Same shape, no entries.
    pub fn zeroed(&self) -> Self {
        ConstraintMatrix { n: self.n, rows: vec![Vec::new(); self.n] }
    }
}

/// Truncated PPR proximity `sum_{k<=r} beta (1-beta)^k P^k` with the random
/// walk matrix `P = D^-1 A`, masked to same-community pairs and symmetrized.
pub fn build_constraint(
    p: &CommunityPartition,
    g: &Graph,
    radius: usize,
    restart: f64,
) -> Result<ConstraintMatrix> {
    if p.n() != g.n() {
        return Err(CelpError::DimensionMismatch { expected: g.n(), found: p.n() });
    }
    if !(restart > 0.0 && restart < 1.0) {
        return Err(CelpError::InvalidParameter(format!("restart must be in (0, 1), got {restart}")));
    }
    let n = g.n();
    let mut raw: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    let mut walk = vec![0.0; n];
    for i in 0..n {
        walk.fill(0.0);
        walk[i] = 1.0;
        let mut support = vec![i];
        let mut coef = restart;
        for step in 0..=radius {
            for &j in &support {
                if p.community_of(j) == p.community_of(i) {
                    *raw[i].entry(j).or_insert(0.0) += coef * walk[j];
                }
            }
            if step == radius {
                break;
            }
            let mut next = vec![0.0; n];
            let mut touched = Vec::new();
            for &x in &support {
                let d = g.degree(x);
                if d == 0 {
                    continue;
                }
                let share = walk[x] / d as f64;
                for &y in g.neighbors(x) {
                    if next[y] == 0.0 {
                        touched.push(y);
                    }
                    next[y] += share;
                }
            }
            touched.sort_unstable();
            walk = next;
            support = touched;
            coef *= 1.0 - restart;
        }
    }
    let mut sym: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for (i, row) in raw.iter().enumerate() {
        for (&j, &w) in row {
            *sym[i].entry(j).or_insert(0.0) += 0.5 * w;
            *sym[j].entry(i).or_insert(0.0) += 0.5 * w;
        }
    }
    let rows = sym.into_iter().map(|r| r.into_iter().collect()).collect();
    Ok(ConstraintMatrix { n, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;

    #[test]
    fn cross_community_is_zero_and_diagonal_has_restart_mass() {
        let g = build_graph(&[(0, 1), (1, 2), (2, 3), (3, 0)], 4, None).unwrap();
        let p = CommunityPartition::from_assignment(2, vec![0, 0, 1, 1]).unwrap();
        let m = build_constraint(&p, &g, 2, 0.15).unwrap();
        for i in 0..4 {
            assert!(m.get(i, i) >= 0.15);
            for j in 0..4 {
                assert_eq!(m.get(i, j), m.get(j, i));
                if p.community_of(i) != p.community_of(j) {
                    assert_eq!(m.get(i, j), 0.0);
                }
            }
        }
        assert_eq!(m.nnz(), 8);
        assert_eq!(m.zeroed().nnz(), 0);
    }

    #[test]
    fn isolated_node_keeps_restart_only() {
        let g = build_graph(&[(0, 1)], 3, None).unwrap();
        let p = CommunityPartition::from_assignment(1, vec![0, 0, 0]).unwrap();
        let m = build_constraint(&p, &g, 3, 0.2).unwrap();
        assert_eq!(m.get(2, 2), 0.2);
        assert_eq!(m.get(0, 2), 0.0);
    }
}
