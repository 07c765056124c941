//! Error types shared across the library.

use thiserror::Error;

use crate::recovery::RecoveryTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("spectrum violates conjugate symmetry at bin {bin} (relative deviation {deviation:.3e})")]
    SymmetryViolation { bin: usize, deviation: f64 },

    #[error("invalid band plan: {0}")]
    BandPlan(String),

    #[error("band packing infeasible: {0}")]
    Packing(String),

    #[error("invalid RF signal spec: {0}")]
    RfSpec(String),

    #[error("zero-power input: {0}")]
    ZeroPower(String),

    #[error("invalid mask: {0}")]
    Mask(String),

    #[error("invalid recovery config: field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("empty sampling mask")]
    EmptyMask,

    #[error("empty spectral support")]
    EmptySupport,

    #[error("recovery diverged at iteration {iter} (residual power {residual_power:.3e})")]
    Divergence {
        iter: usize,
        residual_power: f64,
        trace: RecoveryTrace,
    },

    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: &'static str, reason: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error in {what}: {reason}")]
    Parse { what: String, reason: String },
}

impl Error {
    /// Trace captured up to the point of a divergence failure, if any.
    pub fn trace(&self) -> Option<&RecoveryTrace> {
        match self {
            Error::Divergence { trace, .. } => Some(trace),
            _ => None,
        }
    }
}
