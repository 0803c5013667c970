//! Nonlinear eigenfunctions of one-homogeneous functionals.
//!
//! The crate runs the implicit gradient flow of a total variation
//! ([`flow::run_flow`]), extracts the extinction profile and other
//! eigenfunction candidates from the flow, decomposes signals by recursive
//! profile subtraction ([`scheme::run_scheme`]) and uses the profiles of graph
//! total variation for spectral clustering ([`graph`], [`data`]).
//!
//! ```
//! use eigenflow::flow::{extract_profile, run_flow, FlowParams};
//! use eigenflow::functional::TotalVariation1d;
//!
//! let tv = TotalVariation1d::new(4).unwrap();
//! let params = FlowParams { delta: Some(0.25), ..FlowParams::default() };
//! let trace = run_flow(&tv, &[1.0, 1.0, -1.0, -1.0], &params).unwrap();
//! let profile = extract_profile(&tv, &trace).unwrap();
//! assert!((profile.rayleigh - 1.0).abs() < 1e-8);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod data;
pub mod error;
pub mod flow;
pub mod functional;
pub mod graph;
pub mod io;
pub mod scheme;
pub mod signal;
pub mod verify;

pub use error::{Error, Result};
pub use functional::{Functional, GraphTotalVariation, TotalVariation1d};
pub use graph::WeightedGraph;
pub use signal::Signal;
