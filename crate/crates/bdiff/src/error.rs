use std::path::PathBuf;

/// Top-level failure classes; each maps to a distinct process exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("numerical failure: {0}")]
    Numerical(bdiff_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Numerical(_) => 3,
            Error::Io { .. } => 4,
        }
    }
}

impl From<bdiff_core::Error> for Error {
    fn from(e: bdiff_core::Error) -> Self {
        if e.is_numerical() {
            Error::Numerical(e)
        } else {
            Error::Config(ConfigError::Invalid {
                field: "scenario".into(),
                reason: e.to_string(),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("config syntax: {0}")]
    Syntax(String),

    #[error("`{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error("edge list line {line}: {reason}")]
    EdgeList { line: usize, reason: String },
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
