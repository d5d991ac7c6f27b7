use std::path::{Path, PathBuf};

use thiserror::Error;

/// Harness failures, each with its own process exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    Schema(String),
    #[error(transparent)]
    Contract(#[from] hamlearn::Error),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }

    pub fn schema(e: hamlearn::Error) -> Self {
        HarnessError::Schema(e.to_string())
    }

    /// 3 for I/O, 4 for schema, 5 for simulation contract failures (2 is left to usage errors).
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Io { .. } => 3,
            HarnessError::Schema(_) => 4,
            HarnessError::Contract(_) => 5,
        }
    }
}
