use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("alpha must lie strictly inside (1, 2), got {0}")]
    InvalidAlpha(f64),

    #[error("block count must be at least 2, got {0}")]
    TooFewBlocks(u64),

    #[error("merger size {k} outside [2, {b}]")]
    InvalidMergerSize { b: u64, k: u64 },

    #[error("invalid hypergeometric parameters: population {population}, marked {marked}, draws {draws}")]
    InvalidHypergeometric {
        population: u64,
        marked: u64,
        draws: u64,
    },

    #[error("index range {j}..={k} invalid for a chain with tau = {tau}")]
    InvalidProductRange { j: usize, k: usize, tau: usize },

    #[error("trajectory mismatch: {0}")]
    TrajectoryMismatch(String),

    #[error("empty sample")]
    EmptySample,

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
