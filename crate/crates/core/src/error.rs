use thiserror::Error;

use crate::task_space::{Axis, SplitKind};

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown element `{name}`; valid elements are: {valid}")]
    UnknownElement { name: String, valid: String },

    #[error("unknown task `{name}`; expected Robot_Object_Obstacle_Objective built from: {valid}")]
    UnknownTask { name: String, valid: String },

    #[error("element index {index} out of range for axis {axis}")]
    InvalidElementIndex { axis: Axis, index: usize },

    #[error("task id {0} out of range [0, 256)")]
    InvalidTaskId(usize),

    #[error("malformed multi-hot descriptor: {0}")]
    MalformedMultihot(String),

    #[error("invalid train count {count} for {kind} split (allowed 1..={max})")]
    InvalidTrainCount { kind: SplitKind, count: usize, max: usize },

    #[error("{0} split requires a fixed element")]
    MissingFixedElement(SplitKind),

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("step called on a finished episode; call reset first")]
    StepAfterDone,

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("observation has length {got}, expected {expected}")]
    ObservationLength { got: usize, expected: usize },

    #[error("invalid arena configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
