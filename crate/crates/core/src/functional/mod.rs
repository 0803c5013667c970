//! Absolutely one-homogeneous convex functionals and their proximal maps.
//!
//! Both shipped instances are total variations `J(u) = Σ_e sqrt(w_e)|u_j - u_i|`
//! over an edge set: [`TotalVariation1d`] on a path with unit weights and
//! [`GraphTotalVariation`] on a weighted graph.

mod graph_tv;
pub(crate) mod maxflow;
mod operator;
mod pdhg;
mod tv1d;

use serde::{Deserialize, Serialize};

pub use graph_tv::GraphTotalVariation;
pub use operator::{DifferenceOperator, OpEdge};
pub use pdhg::{ProxSettings, ProxSolution, STEP_PRODUCT};
pub use tv1d::{prox_tv_1d_exact, TotalVariation1d};

use crate::error::Result;
use crate::graph::WeightedGraph;
use crate::signal::{check_len, dot, Signal};

/// How a subgradient membership decision was reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// 1D: the dual field `z` with `p = -div z` was reconstructed explicitly.
    DualField,
    /// Graph: `p` was routed as a flow under edge capacities `sqrt(w_e)`
    /// (exact LP certificate over the edge duals).
    MaxFlow,
    /// Graph: `<p, v> ≤ J(v)` was only tested on sampled directions.
    Sampled { directions: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub member: bool,
    /// `|<p, u> - J(u)| / (1 + J(u))`.
    pub pairing_error: f64,
    /// Amount by which `p` leaves `∂J(0)`; `≤ tol` means feasible.
    pub dual_excess: f64,
    pub certificate: Certificate,
}

/// Serializable description of the domain a functional lives on.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Grid1d { n: usize },
    Graph { graph: WeightedGraph },
}

impl Domain {
    pub fn functional(&self) -> Result<Box<dyn Functional>> {
        Ok(match self {
            Domain::Grid1d { n } => Box::new(TotalVariation1d::new(*n)?),
            Domain::Graph { graph } => Box::new(GraphTotalVariation::new(graph.clone())),
        })
    }
}

pub trait Functional: Send + Sync {
    fn operator(&self) -> &DifferenceOperator;

    fn domain(&self) -> Domain;

    /// `p ∈ ∂J(u)` up to `tol`.
    fn membership(&self, u: &[f64], p: &[f64], tol: f64) -> Result<MembershipReport>;

    fn dim(&self) -> usize {
        self.operator().n()
    }

    fn eval(&self, u: &[f64]) -> Result<f64> {
        check_len(self.dim(), u.len())?;
        Ok(self.operator().total_variation(u))
    }

    /// Orthogonal projection onto the complement of the null space.
    fn null_project(&self, f: &[f64]) -> Result<Signal> {
        check_len(self.dim(), f.len())?;
        Ok(Signal::from_raw(self.operator().null_project(f)))
    }

    /// `argmin_u ½||u - v||² + step J(u)`.
    fn prox(&self, v: &[f64], step: f64, settings: &ProxSettings) -> Result<ProxSolution> {
        self.prox_warm(v, step, settings, None)
    }

    /// Prox with a dual field from a previous solve as the starting point.
    fn prox_warm(
        &self,
        v: &[f64],
        step: f64,
        settings: &ProxSettings,
        warm_dual: Option<&[f64]>,
    ) -> Result<ProxSolution> {
        check_len(self.dim(), v.len())?;
        pdhg::solve(self.operator(), v, step, settings, warm_dual)
    }
}

pub(crate) fn pairing_error(op: &DifferenceOperator, u: &[f64], p: &[f64]) -> f64 {
    let j = op.total_variation(u);
    (dot(p, u) - j).abs() / (1.0 + j)
}
