use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("graph is not linear: {0}")]
    NotLinear(String),

    #[error("ill-conditioned system: residual {residual:e} exceeds {limit:e}")]
    IllConditioned { residual: f64, limit: f64 },

    #[error("quadrature did not converge: change {change:e} exceeds tolerance {tol:e}")]
    NotConverged { change: f64, tol: f64 },

    #[error("embedding invariant violated at column {column}: deviation {deviation:e}")]
    Embedding { column: usize, deviation: f64 },

    #[error("parameter {value:?} outside the admissible box")]
    OutOfDomain { value: Vec<f64> },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
