use thiserror::Error;

/// Errors raised anywhere in the attribution engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("feature `{0}` is not defined in the input vector")]
    MissingFeature(String),

    #[error("lookup failed: {0}")]
    LookupMiss(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("capability error: {0}")]
    Capability(String),

    #[error("argument error: {0}")]
    Argument(String),

    #[error("size error: {what} has {actual}, cap is {cap}")]
    Size { what: String, actual: usize, cap: usize },

    #[error("conditioning on {subset} has zero probability")]
    Conditioning { subset: String },

    #[error("set function is undefined (impossible) on {subset}; use the possible-marginals engine")]
    InvalidSetFunction { subset: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("reduction error: {0}")]
    Reduction(String),

    #[error("construction error: {0}")]
    Construction(String),

    #[error("parse error at {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
