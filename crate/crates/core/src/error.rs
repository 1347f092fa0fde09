use std::fmt;

use thiserror::Error;

/// A single failed parameter invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl Violation {
    pub fn new(field: &'static str, message: impl Into<String>) -> Self {
        Self { field, message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("site index {index} outside lattice range [{min}, {max}]")]
    SiteOutOfRange { index: i64, min: i64, max: i64 },

    #[error("invalid parameters: {}", join(.0))]
    InvalidParams(Vec<Violation>),

    #[error("config error: {0}")]
    Config(String),

    #[error("bessel function argument outside supported domain: order {order}, x {x}")]
    BesselDomain { order: i64, x: f64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("undamped resonance: mode {mode} has zero detuning and zero loss")]
    Divergent { mode: i64 },

    #[error("empty or invalid range [{lo}, {hi}]")]
    EmptyRange { lo: f64, hi: f64 },

    #[error("integration failed at t = {time}: {reason} (max |alpha| = {max_amplitude:e})")]
    Integration { time: f64, max_amplitude: f64, reason: String },

    #[error("fidelity undefined for a zero-norm state")]
    ZeroNorm,

    #[error("relative variation undefined: series average is {0}")]
    ZeroAverage(f64),

    #[error("analysis window too short: {0}")]
    WindowTooShort(String),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("unsupported moment: {0}")]
    UnsupportedMoment(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("malformed data: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join(violations: &[Violation]) -> String {
    violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
