//! Compositional robotic manipulation task space: 256 tasks built from a
//! robot, an object, an obstacle and an objective, with a kinematic
//! simulator, staged rewards and symbolic observations.

pub mod arena;
pub mod env_api;
pub mod error;
pub mod geometry;
pub mod observations;
pub mod rewards;
pub mod robot;
pub mod sim;
pub mod task_space;

pub use arena::{Arena, ArenaConfig};
pub use env_api::TaskEnv;
pub use error::{Error, Result};
pub use observations::{decompose, observe, ObservationLayout, OBS_LEN, STATE_LEN};
pub use rewards::{compute_reward, RewardInputs, RewardMode, Stage, StagedRewardReport};
pub use sim::{Action, ArenaState, Env, StepResult, ACTION_DIM};
pub use task_space::{
    AxisElement, BenchmarkSplit, ObjectKind, ObjectiveKind, ObstacleKind, RobotKind, SplitKind, TaskDescriptor,
};
