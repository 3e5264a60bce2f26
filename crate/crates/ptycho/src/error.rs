use std::path::PathBuf;

/// Errors of the file-facing layer, wrapping the numerical ones.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] ptycho_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file exists but does not hold what it should.
    #[error("{}: {reason}", path.display())]
    Format { path: PathBuf, reason: String },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    /// Invalid command line or config file settings.
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for configuration or argument problems, 3 for a
    /// diverged run, 4 for input/output failures.
    pub fn exit_code(&self) -> i32 {
        use ptycho_core::Error as C;
        match self {
            Error::Core(C::Diverged { .. }) => 3,
            Error::Core(_) | Error::Config(_) => 2,
            Error::Io { .. } | Error::Format { .. } | Error::Json { .. } => 4,
        }
    }
}
