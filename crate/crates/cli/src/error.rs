use std::path::PathBuf;

use logdet_ftrl::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config field '{field}': {msg}")]
    Config { field: String, msg: String },

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Input {
        path: PathBuf,
        #[source]
        source: CoreError,
    },

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{0} suite(s) reported violations")]
    Violations(usize),
}

impl HarnessError {
    pub fn config(field: &str, msg: impl Into<String>) -> Self {
        HarnessError::Config {
            field: field.to_string(),
            msg: msg.into(),
        }
    }

    /// Process exit status: 1 for violations and runtime failures, 2 for
    /// configuration and parse errors, 3 for size caps.
    pub fn exit_code(&self) -> i32 {
        let core = match self {
            HarnessError::Config { .. } | HarnessError::Read { .. } => return 2,
            HarnessError::Write { .. } | HarnessError::Violations(_) => return 1,
            HarnessError::Input { source, .. } | HarnessError::Core(source) => source,
        };
        match core {
            CoreError::Size { .. } => 3,
            CoreError::Parse { .. }
            | CoreError::Input(_)
            | CoreError::Index { .. }
            | CoreError::Dimension { .. }
            | CoreError::Unsupported(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
