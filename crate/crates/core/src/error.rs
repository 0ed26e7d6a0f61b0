use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised while loading data, configuring or running the sampler.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("row {row}: {message}")]
    Consistency { row: usize, message: String },

    #[error("cluster {cluster}: mixed treatment assignments (first seen z={first}, row {row} has z={other})")]
    Randomization {
        cluster: String,
        first: u8,
        other: u8,
        row: usize,
    },

    #[error("positivity violated: arm z={arm} has no clusters")]
    Positivity { arm: u8 },

    #[error("covariate '{0}' is missing for every individual")]
    EmptyCovariate(String),

    #[error("covariates still contain gaps; run baseline imputation first")]
    CovariateGaps,

    #[error("config error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("initialization error: {0}")]
    Initialization(String),

    #[error("numerical underflow at iteration {iteration}, individual {individual}: {message}")]
    Underflow {
        iteration: usize,
        individual: usize,
        message: String,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
