//! Pair features built from quasi-orthogonal node sketches.
//!
//! Every node gets a random vector `eta_u` with `E[eta_u . eta_v] = [u = v]`.
//! Propagating the sketch `p` times through the adjacency gives
//! `eta^p_u = sum of eta_w over p-step walk endpoints w`, so
//! `eta^p_u . eta^q_v` is an unbiased estimate of the number of
//! (p-walk, q-walk) endpoint coincidences. The truncated PPR vector
//! `p^r_u = sum_{k<=r} b (1-b)^k (A^k eta)_u` feeds the path block.
//!
//! Target-link masking recomputes everything a pair needs on `G - (u,v)`.
//! Hops 1 and 2 use closed-form corrections of the propagated sketch:
//! `eta'^1_u = eta^1_u - eta_v` and `eta'^2_u = eta^2_u - eta^1_v`; longer
//! hops fall back to a local walk on the edge-deleted graph.

use ndarray::{Array2, ArrayView1};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::community::CommunityPartition;
use crate::error::{CelpError, Result};
use crate::graph::{bfs_distances, bfs_distances_excluding, canonical, DistanceVector, Graph, NodeId};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SketchKind {
    /// Entries `N(0, 1/F)`.
    #[default]
    Gaussian,
    /// Entries `+-1/sqrt(F)`.
    Sign,
}

/// Base sketch and its propagations `hops[p] = A^p * base`.
#[derive(Debug, Clone)]
pub struct QoSketch {
    pub dim: usize,
    pub kind: SketchKind,
    hops: Vec<Array2<f64>>,
}

impl QoSketch {
    pub fn max_hop(&self) -> usize {
        self.hops.len() - 1
    }

    pub fn base(&self) -> &Array2<f64> {
        &self.hops[0]
    }

    pub fn hop(&self, p: usize) -> Result<&Array2<f64>> {
        self.hops.get(p).ok_or(CelpError::HopOutOfRange { hop: p, max: self.max_hop() })
    }

    #[inline]
    pub fn row(&self, p: usize, u: NodeId) -> ArrayView1<'_, f64> {
        self.hops[p].row(u)
    }
}

pub fn build_sketch(g: &Graph, dim: usize, max_hop: usize, seed: u64) -> Result<QoSketch> {
    build_sketch_with(g, dim, max_hop, seed, SketchKind::Gaussian)
}

pub fn build_sketch_with(
    g: &Graph,
    dim: usize,
    max_hop: usize,
    seed: u64,
    kind: SketchKind,
) -> Result<QoSketch> {
    if dim == 0 {
        return Err(CelpError::InvalidParameter("sketch dimension must be >= 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let n = g.n();
    let scale = 1.0 / (dim as f64).sqrt();
    let base = match kind {
        SketchKind::Gaussian => {
            let normal = Normal::new(0.0, scale).expect("positive std");
            Array2::from_shape_simple_fn((n, dim), || normal.sample(&mut rng))
        }
        SketchKind::Sign => Array2::from_shape_simple_fn((n, dim), || {
            if rng.random::<bool>() {
                scale
            } else {
                -scale
            }
        }),
    };
    let mut hops = vec![base];
    for _ in 0..max_hop {
        let next = propagate(g, hops.last().unwrap());
        hops.push(next);
    }
    Ok(QoSketch { dim, kind, hops })
}

/// `out[v] = sum_{w in N(v)} m[w]`.
pub(crate) fn propagate(g: &Graph, m: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(m.raw_dim());
    for v in 0..g.n() {
        let mut row = out.row_mut(v);
        for &w in g.neighbors(v) {
            row += &m.row(w);
        }
    }
    out
}

/// `eta^p_u . eta^q_v`.
pub fn de_feature(sketch: &QoSketch, u: NodeId, v: NodeId, p: usize, q: usize) -> Result<f64> {
    let (a, b) = (sketch.hop(p)?, sketch.hop(q)?);
    Ok(a.row(u).dot(&b.row(v)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PprVector {
    pub node: NodeId,
    pub radius: usize,
    pub restart: f64,
    pub vec: Vec<f64>,
}

fn check_restart(restart: f64) -> Result<()> {
    if restart > 0.0 && restart < 1.0 {
        Ok(())
    } else {
        Err(CelpError::InvalidParameter(format!("restart {restart} not in (0, 1)")))
    }
}

/// `sum_{k=0}^{radius} b (1-b)^k (A^k eta)_u`, summed in increasing `k`.
pub fn truncated_ppr(sketch: &QoSketch, u: NodeId, radius: usize, restart: f64) -> Result<PprVector> {
    check_restart(restart)?;
    sketch.hop(radius)?;
    let rows = (0..=radius).map(|k| sketch.hops[k].row(u).to_slice_contiguous());
    Ok(PprVector { node: u, radius, restart, vec: ppr_sum(rows, restart, sketch.dim) })
}

fn ppr_sum<'a>(rows: impl IntoIterator<Item = &'a [f64]>, restart: f64, dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    let mut w = restart;
    for row in rows {
        for (o, x) in out.iter_mut().zip(row) {
            *o += w * x;
        }
        w *= 1.0 - restart;
    }
    out
}

trait ContiguousRow<'a> {
    fn to_slice_contiguous(self) -> &'a [f64];
}

impl<'a> ContiguousRow<'a> for ArrayView1<'a, f64> {
    fn to_slice_contiguous(self) -> &'a [f64] {
        // rows of standard-layout matrices are contiguous
        self.to_slice().expect("standard layout sketch")
    }
}

/// Hadamard product `p^r_u (.) p^r_v`.
pub fn path_feature(a: &PprVector, b: &PprVector) -> Result<Vec<f64>> {
    if a.vec.len() != b.vec.len() {
        return Err(CelpError::DimensionMismatch { expected: a.vec.len(), found: b.vec.len() });
    }
    if a.radius != b.radius || a.restart != b.restart {
        return Err(CelpError::InvalidParameter("PPR vectors differ in radius or restart".into()));
    }
    Ok(a.vec.iter().zip(&b.vec).map(|(x, y)| x * y).collect())
}

/// `(s_u, s_v, SPD(c_u, c_v))` by a direct BFS between the two centers.
pub fn community_feature(
    u: NodeId,
    v: NodeId,
    p: &CommunityPartition,
    g: &Graph,
) -> Result<(usize, usize, usize)> {
    g.check_node(u)?;
    g.check_node(v)?;
    let centers = p
        .centers
        .as_ref()
        .ok_or_else(|| CelpError::InvalidParameter("partition has no centers".into()))?;
    let (su, sv) = (p.community_of(u), p.community_of(v));
    let spd = if su == sv { 0 } else { bfs_distances(g, centers[su])?.dist[centers[sv]] };
    Ok((su, sv, spd))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairFeatureConfig {
    /// Hop set for the distance-encoding block.
    pub de_hops: Vec<usize>,
    /// Radii for the truncated-PPR path block.
    pub path_hops: Vec<usize>,
    pub sketch_dim: usize,
    pub restart: f64,
    #[serde(default)]
    pub sketch_kind: SketchKind,
}

impl Default for PairFeatureConfig {
    fn default() -> Self {
        PairFeatureConfig {
            de_hops: vec![1, 2],
            path_hops: vec![1, 2],
            sketch_dim: 1024,
            restart: 0.15,
            sketch_kind: SketchKind::Gaussian,
        }
    }
}

impl PairFeatureConfig {
    pub fn max_hop(&self) -> usize {
        self.de_hops.iter().chain(&self.path_hops).copied().max().unwrap_or(0)
    }

    pub fn de_len(&self) -> usize {
        self.de_hops.len() * self.de_hops.len()
    }

    pub fn path_len(&self) -> usize {
        self.path_hops.len() * self.sketch_dim
    }

    /// Total feature length: embedding term, DE block, path block, com triple.
    pub fn feature_len(&self) -> usize {
        1 + self.de_len() + self.path_len() + 3
    }

    pub fn validate(&self) -> Result<()> {
        check_restart(self.restart)?;
        if self.sketch_dim == 0 {
            return Err(CelpError::InvalidParameter("sketch_dim must be >= 1".into()));
        }
        Ok(())
    }
}

/// `h(u,v) = [emb_dot | f over H_f x H_f | g over H_g | com]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFeature {
    pub emb_dot: f64,
    /// Row-major over `(p, q)`.
    pub de: Vec<f64>,
    pub path: Vec<f64>,
    pub com: (usize, usize, usize),
}

impl PairFeature {
    pub fn len(&self) -> usize {
        1 + self.de.len() + self.path.len() + 3
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Order-independent form: DE block averaged with its transpose and the
    /// community labels sorted.
    pub fn symmetrized(&self) -> PairFeature {
        let h = (self.de.len() as f64).sqrt() as usize;
        let mut de = self.de.clone();
        for i in 0..h {
            for j in 0..h {
                de[i * h + j] = 0.5 * (self.de[i * h + j] + self.de[j * h + i]);
            }
        }
        let (a, b, d) = self.com;
        PairFeature { emb_dot: self.emb_dot, de, path: self.path.clone(), com: (a.min(b), a.max(b), d) }
    }

    /// Flat vector in concatenation order; labels as plain numbers.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.push(self.emb_dot);
        v.extend_from_slice(&self.de);
        v.extend_from_slice(&self.path);
        v.extend([self.com.0 as f64, self.com.1 as f64, self.com.2 as f64]);
        v
    }
}

/// Precomputed state for featurizing many pairs on one graph: the sketch,
/// BFS from every community center and the center-to-center SPD table.
#[derive(Debug, Clone)]
pub struct PairFeaturizer {
    graph: Graph,
    partition: CommunityPartition,
    config: PairFeatureConfig,
    sketch: QoSketch,
    center_dist: Vec<DistanceVector>,
    /// `K x K` row-major.
    center_spd: Vec<usize>,
}

impl PairFeaturizer {
    pub fn new(
        graph: &Graph,
        partition: &CommunityPartition,
        config: &PairFeatureConfig,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if partition.n() != graph.n() {
            return Err(CelpError::DimensionMismatch { expected: graph.n(), found: partition.n() });
        }
        let centers = partition
            .centers
            .clone()
            .ok_or_else(|| CelpError::InvalidParameter("partition has no centers".into()))?;
        let sketch =
            build_sketch_with(graph, config.sketch_dim, config.max_hop(), seed, config.sketch_kind)?;
        let center_dist = centers.iter().map(|&c| bfs_distances(graph, c)).collect::<Result<Vec<_>>>()?;
        let k = centers.len();
        let mut center_spd = vec![0; k * k];
        for a in 0..k {
            for b in 0..k {
                center_spd[a * k + b] = center_dist[a].dist[centers[b]];
            }
        }
        Ok(PairFeaturizer {
            graph: graph.clone(),
            partition: partition.clone(),
            config: config.clone(),
            sketch,
            center_dist,
            center_spd,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn partition(&self) -> &CommunityPartition {
        &self.partition
    }

    pub fn config(&self) -> &PairFeatureConfig {
        &self.config
    }

    pub fn sketch(&self) -> &QoSketch {
        &self.sketch
    }

    pub fn center_spd(&self, a: usize, b: usize) -> usize {
        self.center_spd[a * self.partition.k + b]
    }

    /// Row `u` of `A'^p eta` where `A'` is the adjacency with edge
    /// `(u, other)` deleted.
    fn masked_hop_row(&self, u: NodeId, other: NodeId, p: usize) -> Vec<f64> {
        let s = &self.sketch;
        match p {
            0 => s.row(0, u).to_vec(),
            1 => (&s.row(1, u) - &s.row(0, other)).to_vec(),
            2 => (&s.row(2, u) - &s.row(1, other)).to_vec(),
            _ => self.local_walk_row(u, (u, other), p),
        }
    }

    /// Exact `(A'^p eta)_u` by propagating walk counts from `u` while
    /// skipping the masked edge.
    fn local_walk_row(&self, u: NodeId, skip: (NodeId, NodeId), p: usize) -> Vec<f64> {
        let g = &self.graph;
        let skip = canonical(skip.0, skip.1);
        let mut walks = vec![0.0; g.n()];
        walks[u] = 1.0;
        let mut frontier = vec![u];
        for _ in 0..p {
            let mut next = vec![0.0; g.n()];
            let mut touched = Vec::new();
            for &x in &frontier {
                for &y in g.neighbors(x) {
                    if canonical(x, y) == skip {
                        continue;
                    }
                    if next[y] == 0.0 {
                        touched.push(y);
                    }
                    next[y] += walks[x];
                }
            }
            touched.sort_unstable();
            walks = next;
            frontier = touched;
        }
        let mut out = vec![0.0; self.sketch.dim];
        for &z in &frontier {
            for (o, b) in out.iter_mut().zip(self.sketch.row(0, z)) {
                *o += walks[z] * b;
            }
        }
        out
    }

    fn hop_rows(&self, u: NodeId, other: NodeId, masked: bool, hops: usize) -> Vec<Vec<f64>> {
        (0..=hops)
            .map(|p| if masked { self.masked_hop_row(u, other, p) } else { self.sketch.row(p, u).to_vec() })
            .collect()
    }

    fn com(&self, u: NodeId, v: NodeId, masked: bool) -> (usize, usize, usize) {
        let p = &self.partition;
        let (su, sv) = (p.community_of(u), p.community_of(v));
        if su == sv {
            return (su, sv, 0);
        }
        let spd = self.center_spd(su, sv);
        if !masked {
            return (su, sv, spd);
        }
        let (da, db) = (&self.center_dist[su], &self.center_dist[sv]);
        let on_path = |x: NodeId, y: NodeId| {
            da.dist[x] < self.graph.n() && db.dist[y] < self.graph.n() && da.dist[x] + 1 + db.dist[y] == spd
        };
        if spd < self.graph.n() && (on_path(u, v) || on_path(v, u)) {
            let centers = p.centers.as_ref().expect("checked at construction");
            let d = bfs_distances_excluding(&self.graph, centers[su], (u, v)).expect("valid center");
            (su, sv, d.dist[centers[sv]])
        } else {
            (su, sv, spd)
        }
    }

    /// Pair representation. With `mask_target` and `(u,v)` an edge of the
    /// featurizer's graph, all sketch terms and the center SPD are taken on
    /// the graph without that edge. `emb_dot` is `h_u . h_v` when embeddings
    /// are given, else 0.
    pub fn pair_representation(
        &self,
        u: NodeId,
        v: NodeId,
        embeddings: Option<&Array2<f64>>,
        mask_target: bool,
    ) -> Result<PairFeature> {
        self.graph.check_node(u)?;
        self.graph.check_node(v)?;
        let masked = mask_target && u != v && self.graph.has_edge(u, v);
        let cfg = &self.config;
        let hops = cfg.max_hop();
        let ru = self.hop_rows(u, v, masked, hops);
        let rv = self.hop_rows(v, u, masked, hops);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

        let mut de = Vec::with_capacity(cfg.de_len());
        for &p in &cfg.de_hops {
            for &q in &cfg.de_hops {
                de.push(dot(&ru[p], &rv[q]));
            }
        }
        let mut path = Vec::with_capacity(cfg.path_len());
        for &r in &cfg.path_hops {
            let pu = ppr_sum(ru[..=r].iter().map(Vec::as_slice), cfg.restart, self.sketch.dim);
            let pv = ppr_sum(rv[..=r].iter().map(Vec::as_slice), cfg.restart, self.sketch.dim);
            path.extend(pu.iter().zip(&pv).map(|(a, b)| a * b));
        }
        let emb_dot = match embeddings {
            Some(h) => {
                if h.nrows() != self.graph.n() {
                    return Err(CelpError::DimensionMismatch { expected: self.graph.n(), found: h.nrows() });
                }
                h.row(u).dot(&h.row(v))
            }
            None => 0.0,
        };
        Ok(PairFeature { emb_dot, de, path, com: self.com(u, v, masked) })
    }
}
