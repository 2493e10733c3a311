//! PPO learners for the armsuite task space and the evaluation harness.
//!
//! Three agents are provided: a per-task MLP without the task descriptor, a
//! shared MLP that reads the descriptor, and a compositional network whose
//! modules are selected by the descriptor.

pub mod analysis;
pub mod error;
pub mod eval;
pub mod gae;
pub mod nn;
pub mod persist;
pub mod policy;
pub mod ppo;
pub mod rollout;
pub mod train;

pub use error::{AgentError, Result};
pub use eval::{evaluate, zero_shot, EvalResult, TaskEval};
pub use policy::{ActorCritic, AgentKind};
pub use ppo::PpoConfig;
pub use train::{train, CurveRecord, TrainedModel, Trainer};
