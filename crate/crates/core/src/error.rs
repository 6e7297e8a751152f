use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Error, Debug)]
pub enum Error {
    #[error("photon number {n} exceeds cutoff {cutoff}")]
    PhotonOutOfRange { n: usize, cutoff: usize },

    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("operands live on different spaces (cutoffs {left} vs {right})")]
    SpaceMismatch { left: usize, right: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integration failed at tau = {tau}: {reason}")]
    Integration { tau: f64, reason: String },

    #[error("quadrature did not converge on [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },

    #[error("eigenbranch tracking ambiguous at tau = {tau}: {reason}")]
    BranchTracking { tau: f64, reason: String },

    #[error("no chirp amplitude solves the phase target in [0, {delta0_max}]: attainable phase range [{phase_min}, {phase_max}] rad")]
    NoRoot {
        delta0_max: f64,
        phase_min: f64,
        phase_max: f64,
    },

    #[error("{path}:{line}: {message}")]
    Config {
        path: String,
        line: usize,
        message: String,
    },

    #[error("validation failed for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("i/o error for {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
