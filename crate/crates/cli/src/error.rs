use std::path::Path;

use thiserror::Error;

/// Errors surfaced by the command-line layer, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid or unreadable configuration.
    #[error("config error: {0}")]
    Config(String),
    /// Bad input other than the config: missing results, unknown names.
    #[error("{0}")]
    Input(String),
    #[error("i/o error on {path}: {detail}")]
    Io { path: String, detail: String },
    /// A failure that is not the caller's fault.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            detail: e.to_string(),
        }
    }

    /// 1 for user errors, 2 for internal ones.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) | CliError::Io { .. } => 1,
            CliError::Internal(_) => 2,
        }
    }

    /// Classifies a core error raised while setting up a run: bad parameters
    /// are the user's, numerical breakdowns are not.
    pub fn from_core(context: &str, e: tedopa_core::Error) -> Self {
        use tedopa_core::Error as E;
        let msg = format!("{context}: {e}");
        match e {
            E::Param(_) | E::Observable(_) | E::State(_) | E::Parse { .. } | E::BondMismatch { .. } => {
                CliError::Config(msg)
            }
            E::Io(_) => CliError::Input(msg),
            _ => CliError::Internal(msg),
        }
    }
}
