use thiserror::Error;

/// Errors raised while validating parameters or building a game.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("size limit exceeded: {what} = {size} > {limit}")]
    SizeLimit {
        what: &'static str,
        size: u128,
        limit: u128,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;
