use thiserror::Error;

/// Errors raised by the numeric core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value at sample {index}")]
    NonFinite { index: usize },

    #[error("spectrum is not Hermitian: worst cell {cell:?} deviates by {deviation:e} (relative)")]
    NotHermitian { cell: Vec<usize>, deviation: f64 },

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no shells in the requested frequency range [{lo}, {hi}] of Nyquist")]
    EmptyShellRange { lo: f64, hi: f64 },

    #[error("window of size {size} centred at {center:?} exceeds grid {dims:?}")]
    WindowOutOfBounds {
        center: Vec<usize>,
        size: usize,
        dims: Vec<usize>,
    },

    #[error("input is identically zero")]
    ZeroInput,

    #[error("check not applicable: {0}")]
    Inapplicable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
