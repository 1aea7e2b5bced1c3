use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{context}: {source}")]
    Physics { context: String, source: squeezesim::Error },
    #[error("{0}")]
    EmptyResults(String),
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Physics { source, .. } => source.kind(),
            CliError::EmptyResults(_) => "empty-results",
            CliError::CheckFailed(_) => "check-failed",
        }
    }

    /// `2` for usage and configuration mistakes, `1` otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            _ => 1,
        }
    }

    /// Single machine-readable line, `error: kind=<kind> message=<text>`.
    pub fn line(&self) -> String {
        let message = self.to_string().replace('\n', " ");
        format!("error: kind={} message={message}", self.kind())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T> Context<T> for squeezesim::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|source| CliError::Physics { context: what(), source })
    }
}
