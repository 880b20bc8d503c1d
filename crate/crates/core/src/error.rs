use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error(
        "retry budget of {max_retries} exhausted at component {component}, shot {shot}, step {step} (current node {node})"
    )]
    RetryExhausted {
        component: usize,
        shot: usize,
        step: usize,
        node: usize,
        max_retries: u32,
    },

    #[error("singular system: zero pivot in column {column}")]
    Singular { column: usize },

    #[error("path enumeration too large: N = {dim}, c = {c} (limit N <= 8, c <= 8)")]
    EnumerationTooLarge { dim: usize, c: usize },

    #[error("relative error undefined: exact solution has zero norm")]
    ZeroNorm,

    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("empty group: {0}")]
    EmptyGroup(String),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}
