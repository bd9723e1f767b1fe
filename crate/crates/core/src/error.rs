use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no root: {0}")]
    NoRoot(String),
    #[error("pole: {0}")]
    Pole(String),
    #[error("infeasible problem")]
    Infeasible,
    #[error("unbounded problem")]
    Unbounded,
    #[error("solver stalled after {0} iterations")]
    Stall(usize),
    #[error("did not converge: {0}")]
    NonConvergence(String),
    #[error("invalid dimensions: {0}")]
    Dimension(String),
}

pub type Result<T> = std::result::Result<T, Error>;
