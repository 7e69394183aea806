use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid tree code: {0}")]
    InvalidCode(String),
    #[error("not a spanning tree: {0}")]
    NotATree(String),
    #[error("edge {edge} has nonpositive weight {value}")]
    NonPositiveWeight { edge: usize, value: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
