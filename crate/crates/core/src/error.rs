use thiserror::Error;

/// Errors raised by the numerical core.
///
/// Pole and domain failures are kept distinct from ordinary parameter errors
/// so that sweep tooling can tell a model breakdown from bad input.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AmqdError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole: {0}")]
    Pole(String),

    #[error("index {index} out of range for {len} channels")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("length mismatch: expected {expected}, got {actual} ({what})")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
}

impl AmqdError {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        AmqdError::InvalidParameter(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        AmqdError::InvalidDimension(msg.into())
    }

    /// True for failures that signal a breakdown of the closed-form model
    /// (a pole or a domain violation) rather than malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, AmqdError::Pole(_) | AmqdError::Domain(_))
    }
}

pub type Result<T> = std::result::Result<T, AmqdError>;

pub(crate) fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(AmqdError::LengthMismatch { what, expected, actual });
    }
    Ok(())
}
