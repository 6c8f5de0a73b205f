//! CLI error type and its mapping to process exit codes.

use std::path::PathBuf;

use thiserror::Error;

/// Exit code for bad input: configuration, flags, files or parameters.
pub const EXIT_VALIDATION: i32 = 2;

/// Exit code for a numerical failure inside the library.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error(
        "unknown figure '{0}' (expected one of fig1a, fig1b, fig2a, fig2b, fig3a, fig3b, fig4a, fig4b, fig4c, fig4d)"
    )]
    UnknownFigure(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Library {
        context: String,
        #[source]
        source: jmes::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn library(context: impl Into<String>, source: jmes::Error) -> Self {
        Self::Library { context: context.into(), source }
    }

    /// `2` for input problems, `3` for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) | Self::UnknownFigure(_) | Self::Io { .. } => EXIT_VALIDATION,
            Self::Library { source, .. } => match source {
                jmes::Error::Domain { .. }
                | jmes::Error::InvalidParameter(_)
                | jmes::Error::InsufficientData { .. }
                | jmes::Error::NonPositivePrice { .. }
                | jmes::Error::DegenerateSample => EXIT_VALIDATION,
                _ => EXIT_NUMERICAL,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
