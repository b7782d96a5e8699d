use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, AuditError>;

#[derive(Debug, thiserror::Error)]
pub enum AuditError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// A malformed input file; `line` is 1-based.
    #[error("{path}: {message}, line {line}")]
    Parse { path: String, line: u64, message: String },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Core(#[from] cpm_audit_core::Error),
    /// Inputs that parse but do not fit together.
    #[error("{0}")]
    Data(String),
    /// Bad flags or flag combinations; the CLI exits with status 2.
    #[error("{0}")]
    Usage(String),
}

impl AuditError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AuditError::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<String>, line: u64, message: impl Into<String>) -> Self {
        AuditError::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn is_usage(&self) -> bool {
        matches!(self, AuditError::Usage(_))
    }
}
