use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("cannot read {path}: {source}")]
    ReadInput {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    Config(#[source] online_hmm::Error),

    #[error("incompatible manifests: {0}")]
    Incompatible(String),

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("run failed: {0}")]
    Runtime(#[source] online_hmm::Error),

    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl CliError {
    /// 1 for bad input (arguments, config, manifests), 2 for failures while
    /// running or writing.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_)
            | CliError::ReadInput { .. }
            | CliError::Parse { .. }
            | CliError::Config(_)
            | CliError::Incompatible(_) => 1,
            CliError::Write { .. } | CliError::Runtime(_) | CliError::ThreadPool(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
