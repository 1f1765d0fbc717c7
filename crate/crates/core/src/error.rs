use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("size overflow: {0}")]
    SizeOverflow(String),

    #[error("non-finite entry at position {0}")]
    NonFinite(usize),

    #[error("power iteration did not converge within {iterations} iterations")]
    Convergence { iterations: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("columns are not unit norm (max deviation {deviation:e})")]
    NotNormalized { deviation: f64 },

    #[error("packing construction failed: {0}")]
    PackingFailure(String),

    #[error("{count} supports exceed the enumeration guard of {guard}")]
    CombinatorialExplosion { count: u128, guard: u128 },

    #[error("noise level is zero, SNR is infinite")]
    InfiniteSnr,

    #[error("packing class has no members")]
    EmptyClass,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
