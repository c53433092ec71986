use thiserror::Error;

use crate::hgbasis::ModeIndex;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("mode cutoff {cutoff} too small (need at least {required})")]
    CutoffTooSmall { cutoff: usize, required: usize },

    #[error("quadrature did not converge: doubling the node count changed the result by {rel_change:.3e} (relative)")]
    QuadratureUnconverged { rel_change: f64 },

    #[error("evolution leaked norm out of the truncated mode space: |norm - input norm| = {deviation:.3e}")]
    NormLeakage { deviation: f64 },

    #[error("Riccati-Bessel order {order} exceeds the allowed limit {limit}")]
    OrderOverflow { order: usize, limit: usize },

    #[error("Mie coefficient denominator vanished at order {order}")]
    DegenerateDenominator { order: usize },

    #[error("amplified flow at {port} has exponent {exponent:.3e}, beyond the linear-response limit 0.2")]
    AmplifiedFlowDiverged { port: &'static str, exponent: f64 },

    #[error("local oscillator mode {got} does not match the signal mode {expected} of BHD-{which}")]
    LoMismatch {
        which: usize,
        expected: ModeIndex,
        got: ModeIndex,
    },

    #[error("invalid configuration field `{field}`: {reason}")]
    ConfigInvalid { field: String, reason: String },

    #[error("I/O failure: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV failure: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON failure: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
