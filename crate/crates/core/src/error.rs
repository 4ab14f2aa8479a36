use thiserror::Error;

/// Errors produced anywhere in the model pipeline.
#[derive(Debug, Error)]
pub enum ScormError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("tail unidentifiable: {0}")]
    TailUnidentifiable(String),

    #[error("parameter unidentifiable: {0}")]
    Unidentifiable(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("schema error: missing required column `{column}`")]
    MissingColumn { column: String },

    #[error("line {line}: column `{column}`: {message}")]
    Row {
        line: u64,
        column: String,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl ScormError {
    /// Process exit status used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScormError::Numerical(_) => 4,
            ScormError::InvalidParameter(_) | ScormError::Config(_) => 2,
            _ => 3,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        ScormError::InvalidParameter(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        ScormError::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, ScormError>;
