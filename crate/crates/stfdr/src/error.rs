use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] stfdr_core::Error),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("input contains no p-values")]
    EmptyInput,
    #[error("{0}")]
    Config(String),
    #[error("input digest mismatch for {path}: manifest has {expected}, file has {actual}")]
    DigestMismatch {
        path: PathBuf,
        expected: String,
        actual: String,
    },
    #[error("malformed manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// 2 for user or input errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Core(_)
            | Error::Read { .. }
            | Error::Parse { .. }
            | Error::EmptyInput
            | Error::Config(_)
            | Error::DigestMismatch { .. }
            | Error::Manifest(_) => 2,
            Error::Write { .. } | Error::Json(_) | Error::Csv(_) => 1,
        }
    }
}
