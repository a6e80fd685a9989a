use thiserror::Error;

/// Errors raised by the spectral, simulation and estimation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("failed to bracket zero #{index} of J1 (scan reached x = {reached})")]
    Bracket { index: usize, reached: f64 },

    #[error(
        "gram deviation {deviation:e} exceeds tolerance {tolerance:e}; increase the panel count"
    )]
    GramDeviation { deviation: f64, tolerance: f64 },

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("mode {mode} has zero noise amplitude but a nonzero control")]
    OutsideRkhs { mode: usize },

    #[error("control energy {energy} exceeds the bound N = {bound}")]
    EnergyBound { energy: f64, bound: f64 },

    #[error("non-finite state at step {step}, mode {mode}")]
    NonFinite { step: usize, mode: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("trajectory carries no Brownian increments")]
    MissingIncrements,

    #[error("expected a {expected} trajectory, got {got}")]
    WrongModel {
        expected: &'static str,
        got: &'static str,
    },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("all Laplace exponentials underflowed; consider a tilted estimator")]
    Underflow,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            expected,
            got,
        })
    }
}
