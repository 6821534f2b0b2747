use std::io;
use std::path::PathBuf;

use crate::formats::FormatError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: {source}")]
    Format {
        path: PathBuf,
        #[source]
        source: FormatError,
    },

    #[error("{path}: {message}")]
    Manifest { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] spvp_core::Error),

    #[error("{0}")]
    Usage(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Process exit status for a failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Usage = 1,
    Data = 2,
    Internal = 3,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, source: FormatError) -> Self {
        Error::Format { path: path.into(), source }
    }

    pub fn manifest(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Manifest { path: path.into(), message: message.into() }
    }

    /// Tags an error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            Error::Stage { .. } => self,
            other => Error::Stage { stage, source: Box::new(other) },
        }
    }

    pub fn exit_kind(&self) -> ExitKind {
        match self {
            Error::Stage { source, .. } => source.exit_kind(),
            Error::Usage(_) => ExitKind::Usage,
            Error::Core(spvp_core::Error::InvalidParameter(_)) => ExitKind::Usage,
            Error::Core(_) | Error::Format { .. } | Error::Manifest { .. } => ExitKind::Data,
            Error::Io { source, .. } => match source.kind() {
                io::ErrorKind::NotFound | io::ErrorKind::InvalidData | io::ErrorKind::UnexpectedEof => ExitKind::Data,
                _ => ExitKind::Internal,
            },
        }
    }
}
