use std::path::PathBuf;

use thiserror::Error;

use crate::scene_desc::SceneError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced anywhere in the library.
///
/// Each variant maps onto a distinct process exit code through
/// [`Error::exit_code`], which the command-line front end uses directly.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Scene(#[from] SceneError),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub fn in_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    /// Process exit code for this error class. Zero is reserved for success
    /// and 2 for command-line usage errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) => 3,
            Error::Io { .. } => 4,
            Error::Format { .. } => 5,
            Error::Scene(e) => e.exit_code(),
            Error::Stage { source, .. } => source.exit_code(),
        }
    }
}
