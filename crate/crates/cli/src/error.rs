use std::fmt::Display;

/// Failures surfaced by the command-line tool, one variant per exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn usage(msg: impl Display) -> Self {
        CliError::Usage(msg.to_string())
    }

    pub fn data(msg: impl Display) -> Self {
        CliError::Data(msg.to_string())
    }

    /// Classifies a library error and prefixes it with the pipeline stage.
    pub fn at(stage: &str, err: vicscore_core::Error) -> Self {
        let msg = format!("{stage}: {err}");
        match err {
            vicscore_core::Error::Invalid(_) => CliError::Usage(msg),
            e if e.is_data_error() => CliError::Data(msg),
            _ => CliError::Numerical(msg),
        }
    }
}

/// Attaches a stage name to library results.
pub trait Stage<T> {
    fn stage(self, name: &str) -> Result<T, CliError>;
}

impl<T> Stage<T> for vicscore_core::Result<T> {
    fn stage(self, name: &str) -> Result<T, CliError> {
        self.map_err(|e| CliError::at(name, e))
    }
}

pub type CliResult<T> = Result<T, CliError>;
