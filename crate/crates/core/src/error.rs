use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Inputs whose lengths/dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A value fell outside the domain an operation requires
    /// (negative weight, loss outside [0,1], non-positive eigenvalue, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested feasible set is empty (e.g. clip floor * dim > 1).
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Bad experiment configuration (unknown learner id, invalid parameter map, ...).
    #[error("config error: {0}")]
    Config(String),

    /// An iterative routine hit its iteration cap before reaching tolerance.
    /// The oracles treat this as a bug, never as a soft failure.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
