use thiserror::Error;

/// Errors produced by lens-space computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("lens order k must be at least 2, got {0}")]
    OrderTooSmall(i64),

    #[error("weights must be non-empty")]
    EmptyWeights,

    #[error("weight w[{index}] = {weight} must be a positive integer")]
    NonPositiveWeight { index: usize, weight: i64 },

    #[error("weight w[{index}] = {weight} is not coprime to k = {k}")]
    NotCoprime { index: usize, weight: i64, k: i64 },

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("generator does not commute with the deck transformation (residual {residual:.3e})")]
    NotCommuting { residual: f64 },

    #[error("matrix has wrong shape: expected {expected}x{expected}, got {rows}x{cols}")]
    Shape { expected: usize, rows: usize, cols: usize },

    #[error("segment duration must be finite and positive, got {0}")]
    BadDuration(f64),

    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),

    #[error("quadratic form is not symmetric (residual {0:.3e})")]
    NotSymmetric(f64),

    #[error("quadratic form is not invariant under the cyclic action (residual {0:.3e})")]
    NotInvariant(f64),

    #[error("action data mismatch: {0}")]
    ActionMismatch(String),

    #[error("paths live on different lens spaces")]
    LensMismatch,

    #[error("unitary is outside the Cayley domain (min |1 + eigenvalue| = {0:.3e})")]
    CayleyDomain(f64),

    #[error("invalid time interval [{0}, {1}]")]
    InvalidInterval(f64, f64),

    #[error("internal self-check failed: {0}")]
    SelfCheck(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
