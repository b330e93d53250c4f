//! Exit-code classification: 0 success, 2 usage/config/schema, 3 data/numeric.

use scorefuse::Error as LibError;

#[derive(Debug)]
pub enum AppError {
    /// Bad flags, missing files, malformed headers, schema mismatches,
    /// invalid configuration values. Exit code 2.
    Usage(String),
    /// Corrupted artifacts, non-finite data, numeric failures. Exit code 3.
    Data(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => 2,
            AppError::Data(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            AppError::Usage(m) | AppError::Data(m) => m,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        AppError::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        AppError::Data(msg.into())
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.message())
    }
}

impl std::error::Error for AppError {}

impl From<LibError> for AppError {
    fn from(err: LibError) -> Self {
        match err {
            LibError::Numeric { .. } | LibError::NonFinite { .. } => AppError::Data(err.to_string()),
            _ => AppError::Usage(err.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, AppError>;

/// IO failure while reading an input the user named: a config problem.
pub fn open_failed(path: &std::path::Path, err: std::io::Error) -> AppError {
    AppError::usage(format!("cannot read `{}`: {err}", path.display()))
}

/// IO failure while writing output: a data/environment problem.
pub fn write_failed(path: &std::path::Path, err: impl std::fmt::Display) -> AppError {
    AppError::data(format!("cannot write `{}`: {err}", path.display()))
}
