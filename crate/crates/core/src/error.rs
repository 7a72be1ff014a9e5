use thiserror::Error;

use crate::Channel;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("unit error for `{key}`: {reason}")]
    Unit { key: String, reason: String },

    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("unknown buffer-gas species `{0}`")]
    UnknownSpecies(String),

    #[error("event list is not sorted by timestamp")]
    UnsortedEvents,

    #[error("no detections on the {0} channel")]
    EmptyChannel(Channel),

    #[error("no spectral calibration for the {0} channel")]
    CalibrationMissing(Channel),

    #[error(
        "integration failed on [{lower:.6e}, {upper:.6e}]: estimated error {error_estimate:.3e} \
         after {subdivisions} subdivisions"
    )]
    Integration {
        lower: f64,
        upper: f64,
        error_estimate: f64,
        subdivisions: usize,
    },

    #[error("unknown geometry preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(what: &'static str, value: f64) -> Self {
        Error::Domain { what, value }
    }
}
