//! Distance-to-center structural encodings and their fusion with node features.

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{CelpError, Result};
use crate::graph::{bfs_distances, DistanceVector, Graph, NodeId};

/// Per-node hop distances to every community center (`n x K`), unreachable
/// entries holding the sentinel `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralEncoding {
    pub centers: Vec<NodeId>,
    /// One BFS per center.
    pub columns: Vec<DistanceVector>,
    pub normalization: Normalization,
}

/// Per-column min-max scaling. Sentinel distances are first clamped to the
/// column's finite maximum + 1, so they land on 1.0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub scheme: String,
    pub col_min: Vec<f64>,
    pub col_max: Vec<f64>,
}

impl StructuralEncoding {
    pub fn n(&self) -> usize {
        self.columns.first().map_or(0, |c| c.dist.len())
    }

    pub fn k(&self) -> usize {
        self.columns.len()
    }

    /// Raw distance of node `v` to center `k`.
    #[inline]
    pub fn raw(&self, v: NodeId, k: usize) -> usize {
        self.columns[k].dist[v]
    }

    pub fn raw_matrix(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.n(), self.k()), |(v, k)| self.raw(v, k) as f64)
    }

    pub fn normalized(&self) -> Array2<f64> {
        let n = self.n();
        Array2::from_shape_fn((n, self.k()), |(v, k)| {
            let lo = self.normalization.col_min[k];
            let hi = self.normalization.col_max[k];
            let d = self.raw(v, k) as f64;
            let d = d.min(hi);
            if hi > lo {
                (d - lo) / (hi - lo)
            } else {
                0.0
            }
        })
    }
}

/// One BFS per center; column `k` holds `SPD(v, centers[k])`.
pub fn structural_encoding(g: &Graph, centers: &[NodeId]) -> Result<StructuralEncoding> {
    if centers.is_empty() {
        return Err(CelpError::InvalidParameter("no centers given".into()));
    }
    let columns = centers.iter().map(|&c| bfs_distances(g, c)).collect::<Result<Vec<_>>>()?;
    let n = g.n();
    let mut col_min = Vec::with_capacity(columns.len());
    let mut col_max = Vec::with_capacity(columns.len());
    for col in &columns {
        let finite = col.dist.iter().copied().filter(|&d| d < n);
        let lo = finite.clone().min().unwrap_or(0);
        let hi = finite.max().unwrap_or(0);
        let has_sentinel = col.dist.iter().any(|&d| d >= n);
        col_min.push(lo as f64);
        col_max.push(if has_sentinel { hi + 1 } else { hi } as f64);
    }
    Ok(StructuralEncoding {
        centers: centers.to_vec(),
        columns,
        normalization: Normalization { scheme: "minmax".into(), col_min, col_max },
    })
}

/// Node features with the normalized structural encoding appended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedFeatures {
    pub matrix: Array2<f64>,
    /// Width of the original feature block.
    pub feature_dim: usize,
}

impl AugmentedFeatures {
    /// Input without any structural block: original features or, when the
    /// graph has none, a single constant column so the encoder has an input.
    pub fn features_only(x: Option<&Array2<f64>>, n: usize) -> Self {
        match x {
            Some(x) if x.ncols() > 0 => AugmentedFeatures { matrix: x.clone(), feature_dim: x.ncols() },
            _ => AugmentedFeatures { matrix: Array2::ones((n, 1)), feature_dim: 1 },
        }
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn width(&self) -> usize {
        self.matrix.ncols()
    }

    /// The original feature block.
    pub fn original(&self) -> Array2<f64> {
        self.matrix.slice(s![.., ..self.feature_dim]).to_owned()
    }
}

/// Row-wise `[x_v | str_v]`. A missing feature matrix means `d = 0`.
pub fn augment_features(x: Option<&Array2<f64>>, enc: &StructuralEncoding) -> Result<AugmentedFeatures> {
    let n = enc.n();
    let d = x.map_or(0, |x| x.ncols());
    if let Some(x) = x {
        if x.nrows() != n {
            return Err(CelpError::FeatureRows { expected: n, found: x.nrows() });
        }
    }
    let norm = enc.normalized();
    let mut m = Array2::zeros((n, d + enc.k()));
    if let Some(x) = x {
        m.slice_mut(s![.., ..d]).assign(x);
    }
    m.slice_mut(s![.., d..]).assign(&norm);
    Ok(AugmentedFeatures { matrix: m, feature_dim: d })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;

    fn path3() -> Graph {
        build_graph(&[(0, 1), (1, 2)], 3, None).unwrap()
    }

    #[test]
    fn encoding_examples() {
        let e = structural_encoding(&path3(), &[0]).unwrap();
        assert_eq!(e.raw_matrix().column(0).to_vec(), vec![0.0, 1.0, 2.0]);
        let e = structural_encoding(&path3(), &[0, 2]).unwrap();
        assert_eq!(e.raw_matrix(), ndarray::arr2(&[[0.0, 2.0], [1.0, 1.0], [2.0, 0.0]]));
        let g = build_graph(&[(0, 1), (2, 3)], 4, None).unwrap();
        let e = structural_encoding(&g, &[0]).unwrap();
        assert_eq!(e.raw_matrix().column(0).to_vec(), vec![0.0, 1.0, 4.0, 4.0]);
        // sentinel clamps to finite max + 1 = 2 and maps to 1.0
        assert_eq!(e.normalized().column(0).to_vec(), vec![0.0, 0.5, 1.0, 1.0]);
        assert!(structural_encoding(&g, &[]).is_err());
        assert!(structural_encoding(&g, &[9]).is_err());
    }

    #[test]
    fn augment_shapes() {
        let g = build_graph(&[(0, 1), (1, 2), (2, 3)], 4, None).unwrap();
        let e = structural_encoding(&g, &[0, 2, 3]).unwrap();
        let x = Array2::from_shape_fn((4, 2), |(i, j)| (i * 2 + j) as f64 * 0.37);
        let a = augment_features(Some(&x), &e).unwrap();
        assert_eq!(a.width(), 5);
        assert_eq!(a.original(), x);
        let a0 = augment_features(None, &e).unwrap();
        assert_eq!(a0.matrix, e.normalized());
        for (k, &c) in e.centers.iter().enumerate() {
            assert_eq!(a0.matrix[[c, k]], 0.0);
        }
        assert!(a0.matrix.iter().all(|&v| (0.0..=1.0).contains(&v)));
        let bad = Array2::zeros((3, 2));
        assert!(matches!(augment_features(Some(&bad), &e), Err(CelpError::FeatureRows { .. })));
    }

    #[test]
    fn single_node_column_is_zero() {
        let g = Graph::empty(1);
        let e = structural_encoding(&g, &[0]).unwrap();
        assert_eq!(e.normalized()[[0, 0]], 0.0);
    }
}
