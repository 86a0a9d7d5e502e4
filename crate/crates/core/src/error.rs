use thiserror::Error;

#[derive(Debug, Error)]
pub enum SnlError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("patch {patch} is degenerate: affine rank {rank} < {dim}")]
    DegeneratePatch { patch: usize, rank: usize, dim: usize },
    #[error("disconnected configuration: {0}")]
    DisconnectedConfiguration(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SnlError>;
