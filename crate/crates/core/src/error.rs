use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("lookup failed: {0}")]
    Lookup(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("sizing error: {0}")]
    Sizing(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("regression failed: {0}")]
    Regression(String),
}

pub type Result<T> = core::result::Result<T, Error>;
