use thiserror::Error;

#[derive(Debug, Error)]
pub enum SseError {
    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("instance too large: {subsets} subsets exceeds the cap of {cap}")]
    CombinatorialCap { subsets: u128, cap: u128 },

    #[error("solver diverged at iteration {iteration} (step size too large?)")]
    Divergence { iteration: usize },

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("no consistent attack support with at most {s_max} sensors")]
    NoConsistentSupport { s_max: usize },

    #[error("nothing to summarize")]
    EmptyInput,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = SseError> = std::result::Result<T, E>;
