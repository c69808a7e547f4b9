//! Fluid-community partitioning.
//!
//! Each sweep visits every node in a freshly shuffled order. A node adopts
//! the community with the largest size-normalized presence in its ego
//! network: `argmax_k sum_{w in {v} U N(v)} [s_w = k] / |C_k|`. The current
//! label wins ties, otherwise the smallest community index does. A node never
//! leaves a community it is the last member of.

use ndarray::Array2;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CelpError, Result};
use crate::graph::{bfs_distances, connected_components, Graph, NodeId};
use crate::rng::rng_from_seed;

pub const DEFAULT_MAX_SWEEPS: usize = 100;

/// Relative slack used when comparing ego-network scores for ties.
const TIE_EPS: f64 = 1e-12;

/// Disjoint assignment of every node to one of `k` communities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunityPartition {
    pub k: usize,
    pub assignment: Vec<usize>,
    pub members: Vec<Vec<NodeId>>,
    /// Representative node per community, filled by
    /// [`crate::centrality::community_centers`].
    pub centers: Option<Vec<NodeId>>,
}

impl CommunityPartition {
    /// Builds a partition from labels; every label must be `< k`.
    pub fn from_assignment(k: usize, assignment: Vec<usize>) -> Result<Self> {
        let mut members = vec![Vec::new(); k];
        for (v, &c) in assignment.iter().enumerate() {
            if c >= k {
                return Err(CelpError::InvalidParameter(format!(
                    "node {v} has label {c} but k = {k}"
                )));
            }
            members[c].push(v);
        }
        Ok(CommunityPartition { k, assignment, members, centers: None })
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    #[inline]
    pub fn community_of(&self, v: NodeId) -> usize {
        self.assignment[v]
    }

    /// `c_u`: the center of the community containing `v`.
    pub fn center_of(&self, v: NodeId) -> Option<NodeId> {
        self.centers.as_ref().map(|c| c[self.assignment[v]])
    }

    /// Checks disjointness, coverage, nonempty communities and center membership.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(CelpError::InvalidParameter(m));
        if self.members.len() != self.k {
            return fail(format!("{} member lists for k = {}", self.members.len(), self.k));
        }
        let mut seen = vec![false; self.n()];
        for (c, mem) in self.members.iter().enumerate() {
            if mem.is_empty() {
                return fail(format!("community {c} is empty"));
            }
            for &v in mem {
                if v >= self.n() || seen[v] || self.assignment[v] != c {
                    return fail(format!("node {v} is inconsistently assigned"));
                }
                seen[v] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return fail("some node has no community".into());
        }
        if let Some(centers) = &self.centers {
            if centers.len() != self.k {
                return fail(format!("{} centers for k = {}", centers.len(), self.k));
            }
            for (c, &r) in centers.iter().enumerate() {
                if r >= self.n() || self.assignment[r] != c {
                    return fail(format!("center {r} is not a member of community {c}"));
                }
            }
        }
        Ok(())
    }
}

/// How the `k` starting nodes are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Seeding {
    /// `k` distinct nodes uniformly at random.
    Uniform,
    /// First node uniform; each further seed is drawn uniformly among the
    /// nodes farthest (in hops) from all seeds chosen so far. Unreachable
    /// nodes count as farthest, so every component gets a seed when `k`
    /// allows it.
    #[default]
    Spread,
}

impl std::str::FromStr for Seeding {
    type Err = CelpError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Seeding::Uniform),
            "spread" => Ok(Seeding::Spread),
            _ => Err(CelpError::InvalidParameter(format!("unknown seeding `{s}`"))),
        }
    }
}

/// Fluid communities with the default spread seeding.
pub fn fluidc(g: &Graph, k: usize, max_sweeps: usize, seed: u64) -> Result<CommunityPartition> {
    fluidc_with_seeding(g, k, max_sweeps, seed, Seeding::default())
}

pub fn fluidc_with_seeding(
    g: &Graph,
    k: usize,
    max_sweeps: usize,
    seed: u64,
    seeding: Seeding,
) -> Result<CommunityPartition> {
    let n = g.n();
    if n == 0 || k < 1 || k > n {
        return Err(CelpError::InvalidCommunityCount { k, n });
    }
    let mut rng = rng_from_seed(seed);
    let seeds = choose_seeds(g, k, seeding, &mut rng);

    const UNLABELED: usize = usize::MAX;
    let mut label = vec![UNLABELED; n];
    let mut size = vec![0usize; k];
    for (c, &s) in seeds.iter().enumerate() {
        label[s] = c;
        size[c] = 1;
    }

    let mut order: Vec<NodeId> = (0..n).collect();
    let mut score = vec![0.0f64; k];
    let mut touched: Vec<usize> = Vec::with_capacity(k);
    for _ in 0..max_sweeps {
        order.shuffle(&mut rng);
        let mut changes = 0usize;
        for &v in &order {
            touched.clear();
            for &w in std::iter::once(&v).chain(g.neighbors(v)) {
                let c = label[w];
                if c == UNLABELED {
                    continue;
                }
                if score[c] == 0.0 {
                    touched.push(c);
                }
                score[c] += 1.0 / size[c] as f64;
            }
            if touched.is_empty() {
                continue;
            }
            let best = touched.iter().map(|&c| score[c]).fold(f64::NEG_INFINITY, f64::max);
            let cutoff = best - TIE_EPS * best.abs();
            let current = label[v];
            let target = if current != UNLABELED && score[current] >= cutoff {
                current
            } else {
                touched.iter().copied().filter(|&c| score[c] >= cutoff).min().unwrap()
            };
            for &c in &touched {
                score[c] = 0.0;
            }
            if target == current {
                continue;
            }
            if current != UNLABELED {
                if size[current] == 1 {
                    continue;
                }
                size[current] -= 1;
            }
            size[target] += 1;
            label[v] = target;
            changes += 1;
        }
        if changes == 0 {
            break;
        }
    }

    assign_unreached(g, &mut label, &mut size, UNLABELED);
    CommunityPartition::from_assignment(k, label)
}

fn choose_seeds<R: Rng>(g: &Graph, k: usize, seeding: Seeding, rng: &mut R) -> Vec<NodeId> {
    let n = g.n();
    match seeding {
        Seeding::Uniform => index::sample(rng, n, k).into_vec(),
        Seeding::Spread => {
            let mut seeds = vec![rng.random_range(0..n)];
            // distance to the nearest chosen seed; n marks unreachable
            let mut nearest = bfs_distances(g, seeds[0]).expect("seed in range").dist;
            while seeds.len() < k {
                let far = (0..n).filter(|v| !seeds.contains(v)).map(|v| nearest[v]).max().unwrap();
                let pool: Vec<NodeId> =
                    (0..n).filter(|v| !seeds.contains(v) && nearest[*v] == far).collect();
                let s = pool[rng.random_range(0..pool.len())];
                seeds.push(s);
                let d = bfs_distances(g, s).expect("seed in range").dist;
                for (a, b) in nearest.iter_mut().zip(d) {
                    *a = (*a).min(b);
                }
            }
            seeds
        }
    }
}

/// Nodes never reached by any community (components without a seed) are
/// given, one component at a time, to the currently smallest community.
fn assign_unreached(g: &Graph, label: &mut [usize], size: &mut [usize], unlabeled: usize) {
    if !label.contains(&unlabeled) {
        return;
    }
    let comp = connected_components(g);
    let mut groups: std::collections::BTreeMap<usize, Vec<NodeId>> = Default::default();
    for v in 0..label.len() {
        if label[v] == unlabeled {
            groups.entry(comp[v]).or_default().push(v);
        }
    }
    for nodes in groups.values() {
        let target = (0..size.len()).min_by_key(|&c| (size[c], c)).unwrap();
        for &v in nodes {
            label[v] = target;
        }
        size[target] += nodes.len();
    }
}

/// One-hot community matrix `S` of shape `n x k`.
pub fn partition_matrix(p: &CommunityPartition) -> Array2<f64> {
    let mut s = Array2::zeros((p.n(), p.k));
    for (v, &c) in p.assignment.iter().enumerate() {
        s[[v, c]] = 1.0;
    }
    s
}

/// Adjusted Rand index between two labelings of the same node set.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must cover the same nodes");
    let n = a.len();
    if n < 2 {
        return 1.0;
    }
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![0u64; ka * kb];
    let mut rows = vec![0u64; ka];
    let mut cols = vec![0u64; kb];
    for (&x, &y) in a.iter().zip(b) {
        table[x * kb + y] += 1;
        rows[x] += 1;
        cols[y] += 1;
    }
    let c2 = |x: u64| (x * x.saturating_sub(1) / 2) as f64;
    let index: f64 = table.iter().map(|&x| c2(x)).sum();
    let sa: f64 = rows.iter().map(|&x| c2(x)).sum();
    let sb: f64 = cols.iter().map(|&x| c2(x)).sum();
    let expected = sa * sb / c2(n as u64);
    let max = 0.5 * (sa + sb);
    if (max - expected).abs() < 1e-12 {
        // both labelings trivial in the same way
        return if a_equiv_b(a, b) { 1.0 } else { 0.0 };
    }
    (index - expected) / (max - expected)
}

fn a_equiv_b(a: &[usize], b: &[usize]) -> bool {
    let mut map = std::collections::HashMap::new();
    let mut rev = std::collections::HashMap::new();
    a.iter().zip(b).all(|(x, y)| *map.entry(x).or_insert(y) == y && *rev.entry(y).or_insert(x) == x)
}
