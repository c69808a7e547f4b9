//! Stochastic block model generator with optional planted deletions.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CelpError, Result};
use crate::graph::{build_graph, Graph, Pair};
use crate::rng::stage_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SbmSpec {
    pub block_sizes: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    pub seed: u64,
    /// Fraction of intra-block edges removed after sampling.
    #[serde(default)]
    pub delete_intra: f64,
}

impl SbmSpec {
    pub fn balanced(blocks: usize, block_size: usize, p_in: f64, p_out: f64, seed: u64) -> Self {
        SbmSpec { block_sizes: vec![block_size; blocks], p_in, p_out, seed, delete_intra: 0.0 }
    }

    pub fn n(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out), ("delete_intra", self.delete_intra)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(CelpError::InvalidParameter(format!("{name} must be in [0, 1], got {p}")));
            }
        }
        if self.block_sizes.is_empty() || self.block_sizes.contains(&0) {
            return Err(CelpError::InvalidParameter("block sizes must be nonempty and positive".into()));
        }
        Ok(())
    }

    pub fn labels(&self) -> Vec<usize> {
        self.block_sizes.iter().enumerate().flat_map(|(b, &s)| std::iter::repeat_n(b, s)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SbmGraph {
    pub graph: Graph,
    pub labels: Vec<usize>,
    /// Intra-block edges removed by `delete_intra`, sorted.
    pub deleted: Vec<Pair>,
}

pub fn generate_sbm(spec: &SbmSpec) -> Result<SbmGraph> {
    spec.validate()?;
    let labels = spec.labels();
    let n = labels.len();
    let mut rng = stage_rng(spec.seed, "sbm");
    let mut intra = Vec::new();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let same = labels[u] == labels[v];
            let p = if same { spec.p_in } else { spec.p_out };
            if p > 0.0 && rng.random::<f64>() < p {
                if same {
                    intra.push((u, v));
                } else {
                    edges.push((u, v));
                }
            }
        }
    }
    let cut = crate::graph::floor_fraction(spec.delete_intra, intra.len());
    let mut deleted = Vec::new();
    if cut > 0 {
        let mut del_rng = stage_rng(spec.seed, "sbm.delete");
        intra.shuffle(&mut del_rng);
        deleted = intra.split_off(intra.len() - cut);
        deleted.sort_unstable();
    }
    edges.extend(intra);
    edges.sort_unstable();
    Ok(SbmGraph { graph: build_graph(&edges, n, None)?, labels, deleted })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_probabilities() {
        let g = generate_sbm(&SbmSpec::balanced(2, 2, 1.0, 0.0, 3)).unwrap().graph;
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (2, 3)]);
        let g = generate_sbm(&SbmSpec::balanced(3, 5, 0.0, 0.0, 3)).unwrap().graph;
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn deletion_removes_intra_edges() {
        let mut spec = SbmSpec::balanced(2, 20, 0.5, 0.05, 9);
        let full = generate_sbm(&spec).unwrap();
        spec.delete_intra = 0.1;
        let cut = generate_sbm(&spec).unwrap();
        assert_eq!(full.graph.edge_count(), cut.graph.edge_count() + cut.deleted.len());
        for &(u, v) in &cut.deleted {
            assert_eq!(cut.labels[u], cut.labels[v]);
            assert!(full.graph.has_edge(u, v) && !cut.graph.has_edge(u, v));
        }
    }

    #[test]
    fn invalid_spec() {
        assert!(generate_sbm(&SbmSpec::balanced(2, 2, 1.5, 0.0, 0)).is_err());
        assert!(generate_sbm(&SbmSpec { block_sizes: vec![], p_in: 0.1, p_out: 0.1, seed: 0, delete_intra: 0.0 }).is_err());
    }
}
