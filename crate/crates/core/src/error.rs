use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    #[error("terminology violation: {0}")]
    Terminology(String),

    #[error("unsupported query language: {0}")]
    Unsupported(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("structural error: {0}")]
    Structure(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("query rejected, signature violation: {0}")]
    Signature(String),

    #[error("data error: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the CLI and mirrored by the C API.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Unsupported(_) => 3,
            Error::Budget(_) => 4,
            _ => 2,
        }
    }
}
