//! Weighted difference operator `K` shared by both total-variation instances.
//!
//! Each undirected edge `e = (i, j)` with `i < j` contributes one row
//! `sqrt(w_e) * (e_j - e_i)`, so that `J(u) = ||K u||_1` is the total
//! variation and `∂J(0) = { Kᵀ z : ||z||_∞ ≤ 1 }`.

use super::maxflow::FlowNetwork;
use crate::graph::{connected_components, WeightedGraph};

#[derive(Debug, Clone)]
pub struct DifferenceOperator {
    n: usize,
    edges: Vec<OpEdge>,
    norm_sq_bound: f64,
    components: Vec<usize>,
    n_components: usize,
    /// Edge indices by decreasing weight, ties by index.
    by_weight: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpEdge {
    pub i: usize,
    pub j: usize,
    /// Square root of the edge weight.
    pub scale: f64,
}

impl DifferenceOperator {
    /// Forward differences on a 1D grid with unit spacing.
    pub fn path(n: usize) -> Self {
        let edges: Vec<OpEdge> = (0..n.saturating_sub(1))
            .map(|i| OpEdge {
                i,
                j: i + 1,
                scale: 1.0,
            })
            .collect();
        DifferenceOperator {
            n,
            by_weight: (0..edges.len()).collect(),
            edges,
            norm_sq_bound: 4.0,
            components: vec![0; n],
            n_components: usize::from(n > 0),
        }
    }

    pub fn from_graph(g: &WeightedGraph) -> Self {
        let edges: Vec<OpEdge> = g
            .edges()
            .iter()
            .map(|e| OpEdge {
                i: e.i,
                j: e.j,
                scale: e.w.sqrt(),
            })
            .collect();
        let max_degree = (0..g.n())
            .map(|x| g.neighbors(x).iter().map(|&(_, w)| w).sum::<f64>())
            .fold(0.0, f64::max);
        let (components, n_components) = connected_components(g);
        let mut by_weight: Vec<usize> = (0..edges.len()).collect();
        by_weight.sort_by(|&a, &b| edges[b].scale.total_cmp(&edges[a].scale).then(a.cmp(&b)));
        DifferenceOperator {
            n: g.n(),
            by_weight,
            edges,
            norm_sq_bound: (2.0 * max_degree).max(f64::MIN_POSITIVE),
            components,
            n_components,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[OpEdge] {
        &self.edges
    }

    /// Upper bound on `||K||²`.
    pub fn norm_sq_bound(&self) -> f64 {
        self.norm_sq_bound
    }

    pub(crate) fn edges_by_weight(&self) -> &[usize] {
        &self.by_weight
    }

    pub fn components(&self) -> (&[usize], usize) {
        (&self.components, self.n_components)
    }

    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        for (o, e) in out.iter_mut().zip(&self.edges) {
            *o = e.scale * (u[e.j] - u[e.i]);
        }
    }

    pub fn adjoint(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (e, &ye) in self.edges.iter().zip(y) {
            let t = e.scale * ye;
            out[e.i] -= t;
            out[e.j] += t;
        }
    }

    pub fn total_variation(&self, u: &[f64]) -> f64 {
        self.edges.iter().map(|e| e.scale * (u[e.j] - u[e.i]).abs()).sum()
    }

    /// Subtracts the mean of `f` on every connected component.
    pub fn null_project(&self, f: &[f64]) -> Vec<f64> {
        if self.n == 1 {
            return vec![0.0];
        }
        let mut sums = vec![0.0; self.n_components];
        let mut counts = vec![0usize; self.n_components];
        for (&c, &x) in self.components.iter().zip(f) {
            sums[c] += x;
            counts[c] += 1;
        }
        f.iter()
            .zip(&self.components)
            .map(|(&x, &c)| x - sums[c] / counts[c] as f64)
            .collect()
    }

    /// Finds a dual field `y` with `Kᵀ y = r` and `|y_e| ≤ cap` on the edges
    /// selected by `mask`, by routing `r` as a flow with edge capacities
    /// `cap * sqrt(w_e)`. Returns the field and the unroutable mass.
    pub(crate) fn route(&self, r: &[f64], cap: f64, mask: Option<&[bool]>) -> (Vec<f64>, f64) {
        let source = self.n;
        let sink = self.n + 1;
        let mut net = FlowNetwork::new(self.n + 2);
        let mut arcs = Vec::with_capacity(self.edges.len());
        for (idx, e) in self.edges.iter().enumerate() {
            if mask.is_some_and(|m| !m[idx]) {
                arcs.push(None);
                continue;
            }
            let c = cap * e.scale;
            arcs.push(Some(net.add_edge(e.i, e.j, c, c)));
        }
        let (mut supply, mut demand) = (0.0, 0.0);
        for (i, &ri) in r.iter().enumerate() {
            if ri < 0.0 {
                net.add_edge(source, i, -ri, 0.0);
                supply -= ri;
            } else if ri > 0.0 {
                net.add_edge(i, sink, ri, 0.0);
                demand += ri;
            }
        }
        let tol = 1e-15 * (supply + demand).max(f64::MIN_POSITIVE);
        let routed = net.max_flow(source, sink, tol);
        let y = self
            .edges
            .iter()
            .zip(&arcs)
            .map(|(e, arc)| arc.map_or(0.0, |a| net.flow(a) / e.scale))
            .collect();
        (y, (supply - routed).max(demand - routed).max(0.0))
    }
}
