use std::io;
use std::path::PathBuf;

/// Problems reading or writing experiment files.
#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: ragged features at line {line}: expected {expected} values, found {found}")]
    Ragged {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("{path}: dataset is empty")]
    Empty { path: PathBuf },
    #[error("bad container: {0}")]
    Container(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] uer_core::Error),
}

impl IoError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        IoError::Io {
            path: path.into(),
            source,
        }
    }
}

/// A rejected experiment config.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: key `{key}`: {message}")]
    Invalid {
        key: String,
        line: usize,
        message: String,
    },
    #[error("missing key `{0}`")]
    Missing(String),
    #[error("unknown key `{key}` at line {line}")]
    Unknown { key: String, line: usize },
    #[error("{0}")]
    Io(#[from] IoError),
}

/// Why a subcommand could not finish.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{} run(s) failed:\n  {}", .0.len(), .0.join("\n  "))]
    Failed(Vec<String>),
}

impl RunError {
    /// Process exit status: 1 for config problems, 2 for anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 1,
            _ => 2,
        }
    }
}
