use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidSpec(String),

    #[error("|sigma*x| = {u} exceeds the overflow guard for n = {n}; evaluate through the reversed model")]
    OverflowRisk { u: f64, n: usize },

    #[error("closed-form evaluation too close to a pole: {0}")]
    NearPole(&'static str),

    #[error("asymptotic partition is degenerate for n = {n} (a = {a})")]
    PartitionDegenerate { n: usize, a: f64 },

    #[error("cholesky pivot {pivot:e} at index {index} is below the tolerance {tol:e}")]
    FactorizationFailure { index: usize, pivot: f64, tol: f64 },

    #[error("all polynomial coefficients are numerically zero")]
    DegenerateInput,

    #[error("slope fit needs at least 3 points with distinct n, got {0}")]
    InsufficientPoints(usize),

    #[error("{0}")]
    Precondition(String),
}
