use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degree sum is odd")]
    OddParity,
    #[error("margins are infeasible{}", .0.map(|k| format!(" (violated at k={k})")).unwrap_or_default())]
    Infeasible(Option<usize>),
    #[error("polytope has empty interior{}", .0.map(|k| format!(" (strict inequality fails at k={k})")).unwrap_or_default())]
    NotStrictlyFeasible(Option<usize>),
    #[error("dual variables diverged to the boundary (|lambda|_inf = {0:.3e})")]
    DivergedToBoundary(f64),
    #[error("solver did not converge in {iterations} iterations (residual {residual:.3e})")]
    MaxIterExceeded { iterations: usize, residual: f64 },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("index {index} out of range for {len} vertices")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("expected a one-dimensional kernel, found {0} near-zero eigenvalues")]
    KernelDimensionNotOne(usize),
    #[error("instance too large for exact oracle: {0}")]
    TooLarge(String),
    #[error("quadrature result {value} is not within tolerance of an integer")]
    NotAnInteger { value: f64 },
    #[error(
        "no sample accepted after {trials} trials (estimated acceptance probability {acceptance:.3e})"
    )]
    TrialsExhausted { trials: u64, acceptance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
