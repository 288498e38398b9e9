use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, GmlError>;

#[derive(Debug, Error)]
pub enum GmlError {
    #[error("manifest not found: {}", .0.display())]
    ManifestNotFound(PathBuf),

    #[error("data file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("dimension mismatch in {file}: {message}")]
    DimensionMismatch { file: String, message: String },

    #[error("duplicate sample id `{0}`")]
    DuplicateId(String),

    #[error("zero embedding vector for sample `{id}` (row {row}) in backbone `{backbone}`")]
    ZeroVector {
        backbone: String,
        id: String,
        row: usize,
    },

    #[error("class count mismatch: {0}")]
    ClassCount(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("inconsistent graph input: {0}")]
    Inconsistent(String),

    #[error("variable {0} is already labeled")]
    AlreadyLabeled(usize),

    #[error("brute-force enumeration over {count} inference variables exceeds the cap of {max}")]
    TooManyVariables { count: usize, max: usize },

    #[error("trace invariant violated: {0}")]
    TraceViolation(String),
}

impl GmlError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GmlError::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from caller-supplied parameters rather than data.
    pub fn is_usage(&self) -> bool {
        matches!(self, GmlError::InvalidParameter(_))
    }
}
