use thiserror::Error;

/// Errors produced by the release mechanisms, trainers and data handling.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter was outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The linear system handed to a trainer was numerically singular.
    #[error("singular system: {reason} (min |eigenvalue| {min_abs_eigenvalue:e}, condition {condition:e})")]
    Singular {
        reason: String,
        min_abs_eigenvalue: f64,
        condition: f64,
    },

    /// Data matrix entries fall outside the [-1, 1] bound needed for the sensitivity argument.
    #[error("data not bounded by 1: {count} offending entries, first at (row {row}, col {col})")]
    Unbounded { count: usize, row: usize, col: usize },

    #[error("index {index} out of range 1..={len}")]
    Index { index: usize, len: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    /// CSV or config parse failure; row and column are 1-based where known.
    #[error("parse error{}: {msg}", location(*row, *col))]
    Parse {
        msg: String,
        row: Option<usize>,
        col: Option<usize>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {msg}")]
    Io { path: String, msg: String },
}

fn location(row: Option<usize>, col: Option<usize>) -> String {
    match (row, col) {
        (Some(r), Some(c)) => format!(" at row {r}, column {c}"),
        (Some(r), None) => format!(" at row {r}"),
        (None, Some(c)) => format!(" at column {c}"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            msg: err.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
