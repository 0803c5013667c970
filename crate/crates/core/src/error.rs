use thiserror::Error;

use crate::scheme::Decomposition;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("signal must be non-empty")]
    EmptySignal,

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("signal lies in the null space of the functional")]
    NullSpace,

    #[error("primal-dual solver did not converge after {iterations} iterations (relative gap {gap:.3e})")]
    NonConvergence { iterations: usize, gap: f64 },

    #[error("flow did not reach extinction")]
    NotExtinct,

    #[error("trace has {steps} steps, at least {required} are required")]
    TraceTooShort { steps: usize, required: usize },

    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("only {distinct} distinct values, cannot form {requested} clusters")]
    DegenerateClusters { distinct: usize, requested: usize },

    #[error("cluster {0} is empty")]
    EmptyCluster(usize),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("scheme stopped after {} atoms: {source}", partial.atoms.len())]
    Scheme {
        partial: Box<Decomposition>,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Input errors map to exit code 2, numerical failures to 1.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::EmptySignal
                | Error::NonFinite { .. }
                | Error::InvalidParameter(_)
                | Error::InvalidGraph(_)
                | Error::Parse(_)
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
        )
    }
}
