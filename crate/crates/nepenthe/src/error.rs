use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: String,
        expected: String,
        actual: String,
    },

    #[error("non-finite value produced in {0}")]
    NonFinite(String),

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("prune budget {total} exceeds prunable capacity {capacity}")]
    BudgetExceedsCapacity { total: usize, capacity: usize },

    #[error("layer {layer} cannot be folded: {reason}")]
    FoldUnsupported { layer: usize, reason: String },

    #[error("bad checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },

    #[error("bad IDX file {path} at byte {offset}: {reason}")]
    IdxFormat {
        path: PathBuf,
        offset: u64,
        reason: String,
    },

    #[error("incomplete run in {0}: marker file present")]
    IncompleteRun(PathBuf),

    #[error("missing artifact: {0}")]
    MissingArtifact(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
