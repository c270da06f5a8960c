use thiserror::Error;

pub type Result<T, E = FppError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum FppError {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("edge id {0} out of range")]
    InvalidEdge(usize),

    #[error("vertex id {0} out of range")]
    InvalidVertex(usize),

    #[error("operation requires a torus-product graph")]
    NotATorus,

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("vertex {1} unreachable from {0}")]
    Disconnected(usize, usize),

    #[error("point outside the box: {0}")]
    OutsideBox(String),

    #[error("shard mismatch: {0}")]
    ShardMismatch(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
