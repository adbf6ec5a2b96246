//! Error type shared by all modules.

use core::fmt;

/// Errors produced by constructors and checked operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A vector or matrix had a different dimension than the structure expects.
    DimensionMismatch { expected: usize, got: usize },
    /// An operation that needs at least one element received none.
    EmptyInput,
    /// Cholesky factorization failed: the matrix is not symmetric positive definite.
    NotPositiveDefinite,
    /// An input contained NaN or an infinity where a finite value is required.
    NonFiniteInput,
    /// Mixture weights were negative, all zero, or otherwise unusable.
    InvalidWeights,
    /// A configuration field is out of its documented range.
    InvalidParameter(&'static str),
    /// Random mixture generation exhausted its redraw budget for the given seed.
    MixtureGenerationFailed { seed: u64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::EmptyInput => write!(f, "input must be non-empty"),
            Error::NotPositiveDefinite => {
                write!(f, "matrix is not symmetric positive definite")
            }
            Error::NonFiniteInput => write!(f, "input must be finite"),
            Error::InvalidWeights => write!(f, "weights must be non-negative with positive sum"),
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::MixtureGenerationFailed { seed } => {
                write!(f, "mixture generation failed after 100 redraws (seed {seed})")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
