use thiserror::Error;

/// Errors raised by the pricing models and their oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("outside the model domain: {0}")]
    Domain(String),

    #[error("curve fit needs at least {required} samples, got {got}")]
    TooFewSamples { required: usize, got: usize },

    #[error("samples are not usable: {0}")]
    InvalidSamples(String),

    #[error("quality samples are flat; decay scale and rate are unidentifiable")]
    Unidentifiable,

    #[error("operation `{operation}` is not defined for {kind} bundles")]
    UnsupportedKind {
        operation: &'static str,
        kind: &'static str,
    },

    #[error("characteristic function has no value for coalition {0}")]
    MissingCoalition(String),

    #[error("allocation players {allocation:?} do not match game players {game:?}")]
    PlayerMismatch {
        game: Vec<String>,
        allocation: Vec<String>,
    },

    #[error("no valid point in the search domain")]
    EmptyDomain,

    #[error("failed to read samples: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Rejects NaN and infinities.
pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(invalid(name, format!("must be finite, got {value}")))
    }
}
