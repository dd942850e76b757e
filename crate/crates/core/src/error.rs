//! Error type shared by every module.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid polygon: n0 = {0}, need at least 3")]
    InvalidPolygon(usize),
    #[error("invalid carpet spec: {0}")]
    InvalidSpec(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("word {0} is not a cell of any partition level")]
    InvalidWord(String),
    #[error("invalid function: {0}")]
    InvalidFunction(String),
    #[error("symmetry violation: {0}")]
    SymmetryViolation(String),
    #[error("node budget exceeded at level {level}: estimate {estimate:.0} > budget {budget}")]
    BudgetExceeded { level: usize, estimate: f64, budget: usize },
    #[error("side {0} is met by no cell")]
    EmptyBoundary(usize),
    #[error("connected component without boundary node (node {0})")]
    UngroundedComponent(usize),
    #[error("right-hand side is not mean-zero on a component (sum {0:e})")]
    NotMeanZero(f64),
    #[error("cell {0} induces a disconnected subgraph")]
    DisconnectedCell(String),
    #[error("iteration did not converge after {0} steps")]
    Diverged(usize),
    #[error("no admissible witness at the requested levels: {0}")]
    InsufficientLevel(String),
    #[error("half-side separation threshold not reached, need m >= {0}")]
    ThresholdNotReached(usize),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("no symmetric ring: {0}")]
    RingNotFound(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
