use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch at key {index}: expected {expected}, got {got}")]
    DimMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },

    #[error("top-k budget {k} exceeds {available} available candidates")]
    BudgetTooLarge { k: usize, available: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("instance too large: {0}")]
    InstanceTooLarge(String),

    #[error("bad file format: {0}")]
    Format(String),

    #[error("token {token} of layer {layer} head {head} not present in store")]
    MissingToken {
        layer: usize,
        head: usize,
        token: usize,
    },

    #[error("pipeline stalled: {0}")]
    Deadlock(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
