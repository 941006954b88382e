use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("order error: Hankel order 2k = {requested} exceeds available moments N = {available}")]
    Order { requested: usize, available: usize },

    #[error("vector is not in the interior of the moment space (first failing order {order})")]
    Boundary { order: usize },

    #[error("real-line moment vectors need odd length 2n-1, got {0}")]
    Parity(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid parameters: {0}")]
    Parameter(String),

    #[error("nonpositive pivot {value:e} at index {index}")]
    NonpositivePivot { index: usize, value: f64 },

    #[error("not enough coordinates: need {needed}, have {available}")]
    Length { needed: usize, available: usize },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("bracket expansion overflowed: {0}")]
    Bracket(String),
}

pub type Result<T> = std::result::Result<T, Error>;
