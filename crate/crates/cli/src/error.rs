use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, bad grids, unreadable or invalid config.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(qmem_core::Error),
    #[error(transparent)]
    Model(qmem_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Model(_) | CliError::Io { .. } => 1,
        }
    }
}

impl From<qmem_core::Error> for CliError {
    fn from(e: qmem_core::Error) -> Self {
        use qmem_core::Error::*;
        match e {
            Parse(_)
            | Validation { .. }
            | Unit { .. }
            | UnknownSpecies(_)
            | UnknownPreset(_)
            | CalibrationMissing(_) => CliError::Config(e),
            _ => CliError::Model(e),
        }
    }
}
