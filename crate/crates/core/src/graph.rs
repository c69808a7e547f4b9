//! Undirected simple graphs in compressed sparse form, BFS distances and
//! train/valid/test edge splitting.

use std::collections::{HashSet, VecDeque};

use ndarray::Array2;
use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::error::{CelpError, Result};
use crate::rng::rng_from_seed;

pub type NodeId = usize;

/// Canonical undirected pair, smaller id first.
pub type Pair = (NodeId, NodeId);

#[inline]
pub fn canonical(u: NodeId, v: NodeId) -> Pair {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Immutable undirected simple graph. Neighbor lists are sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
    features: Option<Array2<f64>>,
}

impl Graph {
    /// Builds a graph from an arbitrary edge list: duplicates and reversed
    /// duplicates collapse, self-loops are dropped.
    pub fn from_edges(edges: &[Pair], n: usize, features: Option<Array2<f64>>) -> Result<Self> {
        if let Some(x) = &features {
            if x.nrows() != n {
                return Err(CelpError::FeatureRows { expected: n, found: x.nrows() });
            }
        }
        let mut degree = vec![0usize; n];
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(CelpError::NodeOutOfRange { node: w, n });
                }
            }
            if u != v {
                degree[u] += 1;
                degree[v] += 1;
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut neighbors = vec![0; offsets[n]];
        for &(u, v) in edges {
            if u != v {
                neighbors[fill[u]] = v;
                fill[u] += 1;
                neighbors[fill[v]] = u;
                fill[v] += 1;
            }
        }
        // sort + dedup each row, then compact
        let mut compact = Vec::with_capacity(neighbors.len());
        let mut new_offsets = Vec::with_capacity(n + 1);
        new_offsets.push(0);
        for v in 0..n {
            let row = &mut neighbors[offsets[v]..offsets[v + 1]];
            row.sort_unstable();
            let start = compact.len();
            for &w in row.iter() {
                if compact.len() == start || *compact.last().unwrap() != w {
                    compact.push(w);
                }
            }
            new_offsets.push(compact.len());
        }
        Ok(Graph { offsets: new_offsets, neighbors: compact, features })
    }

    pub fn empty(n: usize) -> Self {
        Graph { offsets: vec![0; n + 1], neighbors: Vec::new(), features: None }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: NodeId) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n()).map(|v| self.degree(v)).collect()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        let (a, b) = if self.degree(u) <= self.degree(v) { (u, v) } else { (v, u) };
        self.neighbors(a).binary_search(&b).is_ok()
    }

    /// Edges as canonical pairs in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = Pair> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u).iter().copied().filter(move |&v| u < v).map(move |v| (u, v))
        })
    }

    pub fn features(&self) -> Option<&Array2<f64>> {
        self.features.as_ref()
    }

    pub fn with_features(mut self, features: Option<Array2<f64>>) -> Result<Self> {
        if let Some(x) = &features {
            if x.nrows() != self.n() {
                return Err(CelpError::FeatureRows { expected: self.n(), found: x.nrows() });
            }
        }
        self.features = features;
        Ok(self)
    }

    /// Same node set and features, restricted to the given edges.
    pub fn with_edges(&self, edges: &[Pair]) -> Result<Self> {
        Graph::from_edges(edges, self.n(), self.features.clone())
    }

    /// Copy of the graph with one edge deleted (no-op for non-edges).
    pub fn without_edge(&self, u: NodeId, v: NodeId) -> Self {
        let e = canonical(u, v);
        let edges: Vec<Pair> = self.edges().filter(|&p| p != e).collect();
        Graph::from_edges(&edges, self.n(), self.features.clone()).expect("edges of a valid graph")
    }

    pub(crate) fn check_node(&self, v: NodeId) -> Result<()> {
        if v >= self.n() {
            Err(CelpError::NodeOutOfRange { node: v, n: self.n() })
        } else {
            Ok(())
        }
    }
}

pub fn build_graph(edges: &[Pair], n: usize, features: Option<Array2<f64>>) -> Result<Graph> {
    Graph::from_edges(edges, n, features)
}

/// Unweighted hop distances from a source. Unreachable nodes hold the
/// sentinel `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceVector {
    pub source: NodeId,
    pub dist: Vec<usize>,
}

impl DistanceVector {
    #[inline]
    pub fn sentinel(&self) -> usize {
        self.dist.len()
    }

    #[inline]
    pub fn is_reachable(&self, v: NodeId) -> bool {
        self.dist[v] < self.sentinel()
    }
}

pub fn bfs_distances(g: &Graph, source: NodeId) -> Result<DistanceVector> {
    g.check_node(source)?;
    Ok(bfs_inner(g, source, None))
}

/// BFS that ignores one undirected edge; used for target-link masking.
pub fn bfs_distances_excluding(g: &Graph, source: NodeId, skip: Pair) -> Result<DistanceVector> {
    g.check_node(source)?;
    Ok(bfs_inner(g, source, Some(canonical(skip.0, skip.1))))
}

fn bfs_inner(g: &Graph, source: NodeId, skip: Option<Pair>) -> DistanceVector {
    let n = g.n();
    let mut dist = vec![n; n];
    dist[source] = 0;
    let mut queue = VecDeque::with_capacity(n);
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        for &w in g.neighbors(u) {
            if dist[w] != n || skip == Some(canonical(u, w)) {
                continue;
            }
            dist[w] = dist[u] + 1;
            queue.push_back(w);
        }
    }
    DistanceVector { source, dist }
}

/// Connected component id per node, numbered in order of smallest member.
pub fn connected_components(g: &Graph) -> Vec<usize> {
    let n = g.n();
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    let mut stack = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = next;
        stack.push(s);
        while let Some(u) = stack.pop() {
            for &w in g.neighbors(u) {
                if comp[w] == usize::MAX {
                    comp[w] = next;
                    stack.push(w);
                }
            }
        }
        next += 1;
    }
    comp
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions { train: 0.8, valid: 0.1, test: 0.1 }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.valid, self.test];
        if parts.iter().any(|f| !f.is_finite() || *f <= 0.0) {
            return Err(CelpError::InvalidFractions(format!(
                "fractions must be positive, got {parts:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(CelpError::InvalidFractions(format!("fractions sum to {sum}, not 1")));
        }
        Ok(())
    }
}

/// `floor(frac * count)` with a small guard against representation error
/// (e.g. 0.3 * 10 = 2.9999999999999996).
pub fn floor_fraction(frac: f64, count: usize) -> usize {
    let x = (frac * count as f64 + 1e-9).floor();
    (x.max(0.0) as usize).min(count)
}

/// Positive edge partition plus fixed evaluation negatives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSplit {
    pub train_edges: Vec<Pair>,
    pub valid_edges: Vec<Pair>,
    pub test_edges: Vec<Pair>,
    pub valid_neg: Vec<Pair>,
    pub test_neg: Vec<Pair>,
}

impl EdgeSplit {
    /// The training graph: `g` restricted to the training edges.
    pub fn train_graph(&self, g: &Graph) -> Result<Graph> {
        g.with_edges(&self.train_edges)
    }
}

/// Shuffles the edges with `seed` and cuts them by `fractions`: train gets
/// `floor(f_train |E|)`, valid `floor(f_valid |E|)`, test the remainder.
/// Each evaluation set gets `neg_per_pos` negatives per positive, drawn
/// without replacement from non-edges of `g`; if the non-edges run out the
/// pool is shared proportionally.
pub fn split_edges(
    g: &Graph,
    fractions: SplitFractions,
    neg_per_pos: usize,
    seed: u64,
) -> Result<EdgeSplit> {
    fractions.validate()?;
    let m = g.edge_count();
    if m < 3 {
        return Err(CelpError::GraphTooSmall { edges: m, required: 3 });
    }
    let mut rng = rng_from_seed(seed);
    let mut edges: Vec<Pair> = g.edges().collect();
    edges.shuffle(&mut rng);
    let n_train = floor_fraction(fractions.train, m);
    let n_valid = floor_fraction(fractions.valid, m).min(m - n_train);
    let mut test_edges = edges.split_off(n_train + n_valid);
    let mut valid_edges = edges.split_off(n_train);
    let mut train_edges = edges;

    let want_valid = valid_edges.len() * neg_per_pos;
    let want_test = test_edges.len() * neg_per_pos;
    let mut negs = sample_non_edges(g, want_valid + want_test, &mut rng);
    let got = negs.len();
    let take_valid = if got < want_valid + want_test {
        ((got as u128 * want_valid as u128) / (want_valid + want_test).max(1) as u128) as usize
    } else {
        want_valid
    };
    let mut test_neg = negs.split_off(take_valid);
    let mut valid_neg = negs;

    for set in [&mut train_edges, &mut valid_edges, &mut test_edges, &mut valid_neg, &mut test_neg]
    {
        set.sort_unstable();
    }
    Ok(EdgeSplit { train_edges, valid_edges, test_edges, valid_neg, test_neg })
}

/// Uniform sample of up to `count` distinct non-edges, in sampling order.
pub fn sample_non_edges<R: rand::Rng>(g: &Graph, count: usize, rng: &mut R) -> Vec<Pair> {
    let n = g.n();
    let total_pairs = n * n.saturating_sub(1) / 2;
    let non_edges = total_pairs - g.edge_count();
    if count == 0 || non_edges == 0 {
        return Vec::new();
    }
    // Enumerate when the request is a large share of the space or the space is small.
    if count * 4 >= non_edges || total_pairs <= 200_000 {
        let mut all = Vec::with_capacity(non_edges);
        for u in 0..n {
            let nb = g.neighbors(u);
            let mut j = nb.partition_point(|&w| w <= u);
            for v in (u + 1)..n {
                if j < nb.len() && nb[j] == v {
                    j += 1;
                    continue;
                }
                all.push((u, v));
            }
        }
        let take = count.min(all.len());
        return index::sample(rng, all.len(), take).into_iter().map(|i| all[i]).collect();
    }
    let mut seen = HashSet::with_capacity(count * 2);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v || g.has_edge(u, v) {
            continue;
        }
        let p = canonical(u, v);
        if seen.insert(p) {
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        Graph::from_edges(&[(0, 1), (1, 2)], 3, None).unwrap()
    }

    #[test]
    fn triangle_degrees() {
        let g = build_graph(&[(0, 1), (1, 2), (0, 2)], 3, None).unwrap();
        assert_eq!(g.degrees(), vec![2, 2, 2]);
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn dedup_and_self_loops() {
        let g = build_graph(&[(0, 1), (1, 0), (2, 2)], 3, None).unwrap();
        assert_eq!(g.degrees(), vec![1, 1, 0]);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn empty_graph() {
        let g = build_graph(&[], 4, None).unwrap();
        assert_eq!(g.degrees(), vec![0; 4]);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            build_graph(&[(0, 3)], 3, None),
            Err(CelpError::NodeOutOfRange { node: 3, n: 3 })
        ));
        let x = Array2::<f64>::zeros((2, 4));
        assert!(matches!(
            build_graph(&[(0, 1)], 3, Some(x)),
            Err(CelpError::FeatureRows { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn bfs_examples() {
        assert_eq!(bfs_distances(&path3(), 0).unwrap().dist, vec![0, 1, 2]);
        let star = build_graph(&[(0, 1), (0, 2), (0, 3), (0, 4)], 5, None).unwrap();
        assert_eq!(bfs_distances(&star, 0).unwrap().dist, vec![0, 1, 1, 1, 1]);
        let two = build_graph(&[(0, 1), (2, 3)], 4, None).unwrap();
        let d = bfs_distances(&two, 0).unwrap();
        assert_eq!(d.dist, vec![0, 1, 4, 4]);
        assert!(!d.is_reachable(2));
        assert!(bfs_distances(&two, 9).is_err());
    }

    #[test]
    fn bfs_excluding_edge() {
        let g = build_graph(&[(0, 1), (1, 2), (0, 2)], 3, None).unwrap();
        assert_eq!(bfs_distances_excluding(&g, 0, (2, 0)).unwrap().dist, vec![0, 1, 2]);
    }

    #[test]
    fn split_triangle() {
        let g = build_graph(&[(0, 1), (1, 2), (0, 2)], 3, None).unwrap();
        let third = 1.0 / 3.0;
        let s = split_edges(&g, SplitFractions { train: third, valid: third, test: third }, 1, 3)
            .unwrap();
        assert_eq!((s.train_edges.len(), s.valid_edges.len(), s.test_edges.len()), (1, 1, 1));
        // complete graph: no negatives exist
        assert!(s.valid_neg.is_empty() && s.test_neg.is_empty());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let edges: Vec<Pair> = (0..10).map(|i| (i, i + 1)).collect();
        let g = build_graph(&edges, 11, None).unwrap();
        let f = SplitFractions { train: 0.8, valid: 0.1, test: 0.1 };
        let a = split_edges(&g, f, 2, 11).unwrap();
        let b = split_edges(&g, f, 2, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.train_edges.len(), a.valid_edges.len(), a.test_edges.len()), (8, 1, 1));
        assert_eq!(a.valid_neg.len(), 2);
        assert_eq!(a.test_neg.len(), 2);
        for p in a.valid_neg.iter().chain(&a.test_neg) {
            assert!(!g.has_edge(p.0, p.1));
        }
    }

    #[test]
    fn split_errors() {
        let g = build_graph(&[(0, 1), (1, 2)], 3, None).unwrap();
        assert!(matches!(
            split_edges(&g, SplitFractions::default(), 1, 0),
            Err(CelpError::GraphTooSmall { .. })
        ));
        let g = build_graph(&[(0, 1), (1, 2), (2, 3)], 4, None).unwrap();
        let bad = SplitFractions { train: 0.5, valid: 0.1, test: 0.1 };
        assert!(matches!(split_edges(&g, bad, 1, 0), Err(CelpError::InvalidFractions(_))));
        let neg = SplitFractions { train: 1.1, valid: -0.05, test: -0.05 };
        assert!(split_edges(&g, neg, 1, 0).is_err());
    }

    #[test]
    fn floor_fraction_guard() {
        assert_eq!(floor_fraction(0.3, 10), 3);
        assert_eq!(floor_fraction(0.25, 10), 2);
        assert_eq!(floor_fraction(1.0, 7), 7);
        assert_eq!(floor_fraction(0.0, 7), 0);
    }

    #[test]
    fn without_edge_removes_only_target() {
        let g = build_graph(&[(0, 1), (1, 2), (0, 2)], 3, None).unwrap();
        let h = g.without_edge(2, 0);
        assert_eq!(h.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    }
}
