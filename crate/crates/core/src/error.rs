//! Error type shared by every module of the toolkit.

use thiserror::Error;

/// Errors reported by grid construction, the forward model, retrieval and
/// analysis. Variants carry enough context to name the offending input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("spectrum resolution: {0}")]
    SpectrumResolution(String),
    #[error("degenerate trace: {0}")]
    DegenerateTrace(&'static str),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("sweep requires at least one idler center")]
    EmptySweep,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
