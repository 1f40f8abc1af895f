use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),

    #[error("non-stationary autoregressive part: {0}")]
    NonStationary(String),

    #[error("non-invertible moving-average part: {0}")]
    NonInvertible(String),

    #[error("invalid time series: {0}")]
    InvalidSeries(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid mismatch: data has {data} points, trajectory has {trajectory}")]
    GridMismatch { data: usize, trajectory: usize },

    #[error("integration failed at t = {time}: {reason}")]
    Integration { time: f64, reason: String },

    #[error("invalid voltage protocol: {0}")]
    InvalidProtocol(String),

    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("structurally unidentifiable: {reason}; null-space direction {direction:?}")]
    Unidentifiable { reason: String, direction: Vec<(String, f64)> },

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("sampler initialization failed: {0}")]
    Initialization(String),

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
