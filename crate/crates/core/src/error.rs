use std::path::PathBuf;

use thiserror::Error;

use crate::series::Timestamp;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("gap of {missing} missing samples between t={from} and t={to} exceeds max_gap={max_gap}")]
    Gap {
        from: Timestamp,
        to: Timestamp,
        missing: usize,
        max_gap: usize,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("empty window: {0}")]
    EmptyWindow(String),

    #[error("insufficient coverage: {0}")]
    Coverage(String),

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error(
        "product state space of {states} exceeds the cap of {cap}; reduce the state count per appliance or the number of appliances"
    )]
    Capacity { states: usize, cap: usize },

    #[error("grid alignment: {0}")]
    Alignment(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("validation: {0}")]
    Validation(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("unknown timezone {0:?}")]
    Timezone(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag, used in JSON error records and FFI codes.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Gap { .. } => "gap",
            Error::Argument(_) => "argument",
            Error::EmptyWindow(_) => "empty_window",
            Error::Coverage(_) => "coverage",
            Error::DegenerateModel(_) => "degenerate_model",
            Error::Capacity { .. } => "capacity",
            Error::Alignment(_) => "alignment",
            Error::Undefined(_) => "undefined",
            Error::Precondition(_) => "precondition",
            Error::Validation(_) => "validation",
            Error::Config(_) => "config",
            Error::Timezone(_) => "timezone",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
