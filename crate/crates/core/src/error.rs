use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("quadrature did not converge within {levels} refinement levels (last estimate {estimate:e}, change {change:e})")]
    Quadrature {
        levels: usize,
        estimate: f64,
        change: f64,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("linear solve failed at step {step}: {reason} (pivot ratio {pivot_ratio:e})")]
    LinearSolve {
        step: usize,
        reason: String,
        pivot_ratio: f64,
    },

    #[error("empty sample set")]
    EmptySamples,

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
