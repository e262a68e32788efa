use std::path::PathBuf;

/// Errors surfaced by the driver. [`CliError::exit_code`] maps them onto the
/// process exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad scenario, flag or input file.
    #[error("{0}")]
    Input(String),

    #[error("{path}:{line}: {reason}")]
    Malformed { path: PathBuf, line: u64, reason: String },

    /// The numerical core rejected a configuration.
    #[error(transparent)]
    Model(#[from] iqdist_core::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Malformed { .. } => 2,
            CliError::Model(e) if matches!(e, iqdist_core::Error::Invalid { .. }) => 2,
            _ => 1,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
