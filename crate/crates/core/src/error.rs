use thiserror::Error;

/// Errors raised by the analytical engine, the simulator and the config loaders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("stationary solver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("fixed point did not converge after {rounds} rounds (last residual {residual:e})")]
    FixedPointNotConverged {
        rounds: usize,
        residual: f64,
        trace: Vec<crate::metrics::FixedPointStep>,
    },

    #[error("state space of {states} joint states exceeds the dense solver cap of {cap}")]
    DenseCapExceeded { states: usize, cap: usize },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("zero marginal mass at SJMC state {0}")]
    ZeroMarginal(usize),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
