use thiserror::Error;

/// Failures mapped onto the process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, unreadable or inconsistent config.
    #[error("configuration error: {0}")]
    Config(String),
    /// `--strict` was given and the result did not meet its threshold.
    #[error("{0}")]
    Strict(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] gatesynth::Error),
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
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Strict(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
