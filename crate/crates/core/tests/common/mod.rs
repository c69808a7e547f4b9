//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use celp_core::community::CommunityPartition;
use celp_core::graph::{build_graph, Pair};
use celp_core::scorer::{build_constraint, ConstraintMatrix, ModelParams, NormalizedAdjacency, Objective};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-6;
pub const TOL: f64 = 1e-5;

pub struct Instance {
    pub adj: NormalizedAdjacency,
    pub x: Array2<f64>,
    pub pairs: Vec<Pair>,
    pub rows: Array2<f64>,
    pub labels: Vec<bool>,
    pub m: ConstraintMatrix,
    pub anchors: Vec<usize>,
}

pub fn instance() -> Instance {
    let edges = [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3), (5, 6), (6, 7), (7, 8), (8, 9), (9, 6), (1, 8)];
    let g = build_graph(&edges, 10, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = Array2::from_shape_simple_fn((10, 4), || rng.random_range(-1.0..1.0));
    let p = CommunityPartition::from_assignment(3, vec![0, 0, 0, 1, 1, 1, 2, 2, 2, 2]).unwrap();
    let m = build_constraint(&p, &g, 2, 0.15).unwrap();
    let pairs: Vec<Pair> = vec![(0, 1), (3, 5), (6, 9), (0, 7), (2, 4), (5, 8)];
    let labels = vec![true, true, true, false, false, false];
    let rows = Array2::from_shape_simple_fn((pairs.len(), 6), || rng.random_range(-1.0..1.0));
    Instance { adj: NormalizedAdjacency::from_graph(&g), x, pairs, rows, labels, m, anchors: (0..10).collect() }
}

pub fn max_rel_error(alpha: f64, tau: f64) -> (f64, String) {
    let inst = instance();
    let obj = Objective {
        adjacency: &inst.adj,
        inputs: &inst.x,
        pairs: &inst.pairs,
        rows: &inst.rows,
        labels: &inst.labels,
        constraint: Some(&inst.m),
        anchors: &inst.anchors,
        alpha,
        tau,
    };
    let params = ModelParams::init(4, 5, 2, 6, 3, 17);
    let (_, grad) = obj.loss_and_grad(&params).unwrap();
    let names = params.tensor_names();
    let mut worst = (0.0, String::new());
    for t in 0..names.len() {
        for i in 0..params.tensors()[t].len() {
            let mut plus = params.clone();
            plus.tensors_mut()[t][i] += STEP;
            let mut minus = params.clone();
            minus.tensors_mut()[t][i] -= STEP;
            let fd = (obj.loss(&plus).unwrap().total - obj.loss(&minus).unwrap().total) / (2.0 * STEP);
            let an = grad.tensors()[t][i];
            // relative error with an absolute floor for vanishing entries
            let err = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-8);
            if err > worst.0 {
                worst = (err, format!("{}[{i}] analytic {an:e} numeric {fd:e}", names[t]));
            }
        }
    }
    worst
}


/// Erdos-Renyi graph with edge probability `p`.
pub fn random_graph(n: usize, p: f64, seed: u64) -> celp_core::graph::Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    build_graph(&edges, n, None).unwrap()
}
