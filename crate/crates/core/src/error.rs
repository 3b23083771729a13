//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the statistical core.
#[derive(Debug, Error)]
pub enum Error {
    /// Inputs with inconsistent or unusable dimensions.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A value outside the domain an operation requires.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical routine could not produce a usable result.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Invalid combination of run options.
    #[error("invalid options: {0}")]
    InvalidOptions(String),

    /// A model simulator failed to produce data.
    #[error("simulation error: {0}")]
    Simulation(String),

    /// A sampler exceeded an internal safety cap.
    #[error("sampler error: {0}")]
    Sampler(String),

    /// A sample too degenerate to summarize (for example, all weights zero).
    #[error("degenerate sample: {0}")]
    Degenerate(String),

    /// Malformed text input (trace files, data files).
    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
