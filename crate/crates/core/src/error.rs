use std::io;

use thiserror::Error;

/// Errors produced anywhere in the discretization and solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain must be a square, got [{ax}, {bx}] x [{ay}, {by}]")]
    NonSquareDomain { ax: f64, bx: f64, ay: f64, by: f64 },

    #[error("mesh needs at least 2 cells per axis, got {0}")]
    MeshTooCoarse(usize),

    #[error("coarse cell count {m} does not divide fine cell count {n}")]
    CoarseMismatch { n: usize, m: usize },

    #[error("overlap of {overlap} cells must satisfy 1 <= overlap < {limit}")]
    InvalidOverlap { overlap: usize, limit: usize },

    #[error("fractional order {0} outside the admissible range")]
    OrderOutOfRange(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("direction count {0} must be even and positive")]
    OddDirectionCount(usize),

    #[error("unknown measure `{0}` (expected `axes4` or `uniform:L`)")]
    UnknownMeasure(String),

    #[error(
        "measure is not antipodally symmetric: direction {theta} (weight {weight}) has no partner"
    )]
    AsymmetricMeasure { theta: f64, weight: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("{0} is not symmetric positive definite")]
    NotPositiveDefinite(String),

    #[error("numerical breakdown: {0}")]
    Breakdown(String),

    #[error("dense materialization of dimension {0} exceeds the limit")]
    TooLargeForDense(usize),

    #[error("malformed symbol file: {0}")]
    Format(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by bad user input rather than numerics or IO.
    pub fn is_invalid_input(&self) -> bool {
        !matches!(
            self,
            Error::NotPositiveDefinite(_) | Error::Breakdown(_) | Error::Io(_) | Error::Format(_)
        )
    }

    /// True for failures that indicate a numerical problem (NaN, loss of definiteness).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NotPositiveDefinite(_) | Error::Breakdown(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
