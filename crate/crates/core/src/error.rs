use thiserror::Error;

/// Errors raised by the numeric kernels, objectives, solvers and loaders.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SigmaError {
    #[error("matrix of order {order} is not positive definite (even after a diagonal shift); adding l2 regularization (xi2 > 0) usually helps")]
    NotPositiveDefinite { order: usize },

    #[error("argument outside function domain: {0}")]
    Domain(String),

    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("point outside objective domain: row {row} has margin {margin:e}")]
    OutOfDomain { row: usize, margin: f64 },

    #[error("no point with all Poisson margins positive was found; the data may admit none")]
    NoFeasibleStart,

    #[error("line search failed after {halvings} halvings (directional derivative {dir_deriv:e})")]
    LineSearchFailed { halvings: usize, dir_deriv: f64 },

    #[error("direction selection with the full-decrement check requires the Newton decrement")]
    MissingNewtonDecrement,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("feature index error on line {line}: {msg}")]
    Index { line: usize, msg: String },

    #[error("ragged rows: line {line} has {found} fields, expected {expected}")]
    RaggedRows { line: usize, expected: usize, found: usize },

    #[error("could not synthesize labels with a positive margin")]
    InfeasibleSynthesis,

    #[error("i/o error on {path}: {msg}")]
    Io { path: String, msg: String },
}

pub type Result<T> = std::result::Result<T, SigmaError>;
