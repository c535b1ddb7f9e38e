use alloc::string::String;
use num_complex::Complex64;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("{routine} did not converge after {iterations} iterations ({detail})")]
    NonConvergence {
        routine: &'static str,
        iterations: usize,
        detail: String,
    },

    #[error("matrix is singular (zero pivot in column {column})")]
    Singular { column: usize },

    #[error("overflow guard: {0}")]
    Overflow(String),

    #[error("point {point} is within {distance:e} of the cut [0, 4]")]
    CutProximity { point: Complex64, distance: f64 },

    #[error("pole proximity: |1 - lambda tanh(2 theta)| = {0:e}")]
    PoleProximity(f64),

    #[error("contour node {index} at {point} failed: {reason}")]
    NodeFailure {
        index: usize,
        point: Complex64,
        reason: String,
    },

    #[error("contour index not integral after refinement: raw {raw}, residual {residual:e}")]
    NonIntegralIndex { raw: Complex64, residual: f64 },

    #[error("index consistency failure: {0}")]
    Consistency(String),

    #[error("window pollution: {0}")]
    Pollution(String),

    #[error("empty spectral projector on ({a}, {b})")]
    EmptyProjector { a: f64, b: f64 },

    #[error("{0}")]
    Domain(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
