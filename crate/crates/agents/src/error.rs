use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Core(#[from] armsuite_core::Error),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training diverged: {0}")]
    Divergence(String),
    #[error("empty rollout")]
    EmptyRollout,
    #[error("single-task agents have no descriptor input and cannot be evaluated zero-shot")]
    SingleTaskZeroShot,
    #[error("model was trained on split {model} but evaluation uses split {split}")]
    ProvenanceMismatch { model: String, split: String },
    #[error("analysis requires a restricted split, got {0}")]
    NotRestricted(String),
    #[error("need at least 2 qualifying tasks, got {0}")]
    TooFewTasks(usize),
    #[error("model parameters changed during evaluation")]
    ParametersMutated,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = AgentError> = std::result::Result<T, E>;
