use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spin quantum number {0}: 2s must be a positive integer")]
    InvalidSpin(f64),

    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("state is not physical: {0}")]
    NotPhysical(String),

    /// Detection probability of a mediator fell below the underflow threshold.
    #[error("detection impossible at step {step} (probability {probability:e})")]
    DetectionImpossible { step: usize, probability: f64 },

    #[error("sampler {sampler} is not defined for s = {spin}")]
    SamplerMismatch { sampler: &'static str, spin: f64 },

    /// Malformed configuration text; the message carries line and column.
    #[error("config: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input rather than by the computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidSpin(_)
                | Error::InvalidParameter { .. }
                | Error::Dimension(_)
                | Error::NotPhysical(_)
                | Error::SamplerMismatch { .. }
                | Error::Config(_)
        )
    }
}
