//! Finite weighted graphs and the linear/nonlinear graph operators used for
//! spectral clustering: k-NN construction, `L = D - W`, the Fiedler baseline
//! and the graph p-Laplacian.

mod knn;
mod spectral;

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

pub use knn::{build_knn_graph, KernelScale};
pub use spectral::{fiedler_vector, laplacian_matrix, p_laplacian_apply, FiedlerVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// Undirected graph with strictly positive edge weights. Edges are stored
/// once with `i < j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphRecord", into = "GraphRecord")]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

/// On-disk form: `{"n": 3, "edges": [[0, 1, 0.5], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphRecord {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl WeightedGraph {
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut stored = Vec::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); n];
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) references a vertex outside 0..{n}"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {a}")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) has weight {w}; weights must be positive and finite"
                )));
            }
            let (i, j) = (a.min(b), a.max(b));
            if !seen.insert((i, j)) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({i}, {j})")));
            }
            stored.push(Edge { i, j, w });
            adjacency[i].push((j, w));
            adjacency[j].push((i, w));
        }
        Ok(WeightedGraph {
            n,
            edges: stored,
            adjacency,
        })
    }

    /// Path `0 - 1 - ... - (n-1)` with a common weight.
    pub fn path(n: usize, w: f64) -> Result<Self> {
        Self::new(n, (1..n).map(|i| (i - 1, i, w)).collect())
    }

    /// 4-connected `rows x cols` grid with unit weights, row-major vertex order.
    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1, 1.0));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols, 1.0));
                }
            }
        }
        Self::new(rows * cols, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        &self.adjacency[x]
    }

    pub fn degree(&self, x: usize) -> f64 {
        self.adjacency[x].iter().map(|&(_, w)| w).sum()
    }
}

impl TryFrom<GraphRecord> for WeightedGraph {
    type Error = Error;

    fn try_from(r: GraphRecord) -> Result<Self> {
        WeightedGraph::new(r.n, r.edges)
    }
}

impl From<WeightedGraph> for GraphRecord {
    fn from(g: WeightedGraph) -> Self {
        GraphRecord {
            n: g.n,
            edges: g.edges.iter().map(|e| (e.i, e.j, e.w)).collect(),
        }
    }
}

/// Component id per vertex (ids numbered by first appearance) and the number
/// of components.
pub fn connected_components(g: &WeightedGraph) -> (Vec<usize>, usize) {
    let mut label = vec![usize::MAX; g.n()];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..g.n() {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = count;
        queue.push_back(start);
        while let Some(x) = queue.pop_front() {
            for &(y, _) in g.neighbors(x) {
                if label[y] == usize::MAX {
                    label[y] = count;
                    queue.push_back(y);
                }
            }
        }
        count += 1;
    }
    (label, count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_malformed_edges() {
        assert!(WeightedGraph::new(2, vec![(0, 0, 1.0)]).is_err());
        assert!(WeightedGraph::new(2, vec![(0, 1, 0.0)]).is_err());
        assert!(WeightedGraph::new(2, vec![(0, 1, f64::NAN)]).is_err());
        assert!(WeightedGraph::new(2, vec![(0, 1, 1.0), (1, 0, 2.0)]).is_err());
        assert!(WeightedGraph::new(2, vec![(0, 2, 1.0)]).is_err());
        let g = WeightedGraph::new(2, vec![(1, 0, 2.0)]).unwrap();
        assert_eq!(g.edges()[0], Edge { i: 0, j: 1, w: 2.0 });
    }

    #[test]
    fn json_format() {
        let g: WeightedGraph = serde_json::from_str(r#"{"n": 3, "edges": [[0, 1, 0.5], [2, 1, 2.0]]}"#).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.degree(1), 2.5);
        let out = serde_json::to_string(&g).unwrap();
        assert_eq!(out, r#"{"n":3,"edges":[[0,1,0.5],[1,2,2.0]]}"#);
        assert!(serde_json::from_str::<WeightedGraph>(r#"{"n": 1, "edges": [[0, 0, 1.0]]}"#).is_err());
    }

    #[test]
    fn components() {
        let (labels, count) = connected_components(&WeightedGraph::path(4, 1.0).unwrap());
        assert_eq!((labels, count), (vec![0, 0, 0, 0], 1));
        let g = WeightedGraph::new(4, vec![(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert_eq!(connected_components(&g), (vec![0, 0, 1, 1], 2));
    }

    #[test]
    fn grid_shape() {
        let g = WeightedGraph::grid(3, 4).unwrap();
        assert_eq!(g.n(), 12);
        assert_eq!(g.edges().len(), 3 * 3 + 2 * 4);
    }
}
