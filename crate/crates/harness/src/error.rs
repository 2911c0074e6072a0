use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config parse error: {0}")]
    Parse(String),

    #[error("config key `{key}`: unknown {kind} `{name}` (known: {known})")]
    UnknownComponent {
        key: String,
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("config key `{key}`: {message}")]
    InvalidValue { key: String, message: String },

    #[error("file not found: {0}")]
    MissingFile(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("empty plot: {0}")]
    EmptyPlot(String),

    #[error(transparent)]
    Core(#[from] stp_core::Error),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        if source.kind() == std::io::ErrorKind::NotFound {
            return HarnessError::MissingFile(path.to_path_buf());
        }
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn invalid(key: impl Into<String>, message: impl Into<String>) -> Self {
        HarnessError::InvalidValue {
            key: key.into(),
            message: message.into(),
        }
    }
}
