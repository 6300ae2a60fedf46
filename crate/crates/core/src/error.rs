use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration value is out of range or inconsistent.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// An operation was applied in the wrong order (e.g. a site assessed twice).
    #[error("state error: {0}")]
    State(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
