use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("load overflow: {balls} balls with weight up to {max_weight} reach 2^62")]
    LoadOverflow { balls: u64, max_weight: f64 },

    #[error("exponent overflow: alpha * max|x| = {exponent:.3} exceeds {limit} (alpha = {alpha}, max|x| = {max_abs})")]
    ExponentOverflow {
        exponent: f64,
        limit: f64,
        alpha: f64,
        max_abs: f64,
    },

    #[error("moment generating function undefined at z = {z}: {reason}")]
    MgfDomain { z: f64, reason: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("trial {trial}: {source}")]
    Trial {
        trial: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
