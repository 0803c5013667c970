use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::WeightedGraph;
use crate::error::{Error, Result};

/// Bandwidth `s` of the Gaussian kernel `exp(-d² / (2 s²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelScale {
    /// Mean distance to the k-th nearest neighbor.
    Auto,
    Fixed(f64),
}

/// Indices of the `k` nearest neighbors of every point, ties broken by index.
fn neighbor_lists(points: &[[f64; 2]], k: usize) -> Vec<Vec<(usize, f64)>> {
    points
        .iter()
        .enumerate()
        .map(|(a, pa)| {
            let mut d: Vec<(usize, f64)> = points
                .iter()
                .enumerate()
                .filter(|&(b, _)| b != a)
                .map(|(b, pb)| (b, (pa[0] - pb[0]).hypot(pa[1] - pb[1])))
                .collect();
            d.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
            d.truncate(k);
            d
        })
        .collect()
}

/// k-nearest-neighbor graph with union symmetrization: `(i, j)` is an edge
/// when either point is among the other's `k` nearest.
pub fn build_knn_graph(points: &[[f64; 2]], k: usize, scale: KernelScale) -> Result<WeightedGraph> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InvalidParameter("k-NN graph needs at least two points".into()));
    }
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must satisfy 1 <= k < n = {n}"
        )));
    }
    if let Some(index) = points.iter().position(|p| !(p[0].is_finite() && p[1].is_finite())) {
        return Err(Error::NonFinite { index });
    }
    let lists = neighbor_lists(points, k);
    let s = match scale {
        KernelScale::Fixed(s) => s,
        KernelScale::Auto => lists.iter().map(|l| l[k - 1].1).sum::<f64>() / n as f64,
    };
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "kernel scale must be positive, got {s}"
        )));
    }
    let mut pairs = BTreeMap::new();
    for (a, list) in lists.iter().enumerate() {
        for &(b, d) in list {
            pairs.entry((a.min(b), a.max(b))).or_insert(d);
        }
    }
    let edges = pairs
        .into_iter()
        .map(|((i, j), d)| (i, j, (-d * d / (2.0 * s * s)).exp()))
        .collect();
    WeightedGraph::new(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points() {
        let g = build_knn_graph(&[[0.0, 0.0], [3.0, 4.0]], 1, KernelScale::Fixed(5.0)).unwrap();
        assert_eq!(g.edges().len(), 1);
        assert!((g.edges()[0].w - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn collinear_points_give_a_path() {
        let pts: Vec<[f64; 2]> = (0..5).map(|i| [i as f64, 0.0]).collect();
        let g = build_knn_graph(&pts, 1, KernelScale::Auto).unwrap();
        let pairs: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.i, e.j)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 2), (2, 3), (3, 4)]);
    }

    #[test]
    fn duplicates_get_unit_weight() {
        let g = build_knn_graph(&[[1.0, 1.0], [1.0, 1.0], [2.0, 1.0]], 1, KernelScale::Fixed(1.0)).unwrap();
        assert_eq!(g.edges()[0].w, 1.0);
    }

    #[test]
    fn rejects_bad_k() {
        let pts = [[0.0, 0.0], [1.0, 0.0]];
        assert!(build_knn_graph(&pts, 2, KernelScale::Auto).is_err());
        assert!(build_knn_graph(&pts, 0, KernelScale::Auto).is_err());
        assert!(build_knn_graph(&pts[..1], 1, KernelScale::Auto).is_err());
    }
}
