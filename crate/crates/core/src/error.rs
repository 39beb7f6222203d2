use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("index out of range: {what} = {index}, limit {limit}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("degenerate metric at node {node}: {detail}")]
    DegenerateMetric { node: usize, detail: String },

    /// Surface fails to be spacelike; `node` is the worst offender.
    #[error("surface is not spacelike: margin {margin:.3e} at node {node}")]
    NotSpacelike { node: usize, margin: f64 },

    #[error("hypothesis failed: {0}")]
    Hypothesis(String),

    #[error("admissibility lost: {0}")]
    Admissibility(String),

    #[error("surface is not normalized at the basepoint: tau(p) = {tau}")]
    NotNormalized { tau: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e}): {reason}")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        reason: String,
    },

    #[error("transformed surface is not a graph over the equator at {} node(s)", nodes.len())]
    Reparametrization { nodes: Vec<usize> },

    #[error("linear solve failed: {0}")]
    Linear(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a mathematical precondition (as opposed to
    /// numerical breakdown or I/O).
    pub fn is_hypothesis(&self) -> bool {
        matches!(
            self,
            Error::Hypothesis(_)
                | Error::NotSpacelike { .. }
                | Error::Admissibility(_)
                | Error::NotNormalized { .. }
                | Error::DegenerateMetric { .. }
                | Error::Reparametrization { .. }
        )
    }
}
