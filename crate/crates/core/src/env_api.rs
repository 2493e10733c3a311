//! Conventional reset/step facade over one task, working in normalized
//! actions and flat observations. Intended for scripting front ends.

use serde::{Deserialize, Serialize};

use crate::arena::Arena;
use crate::error::Result;
use crate::observations::{observe, OBS_LEN, STATE_LEN};
use crate::rewards::Stage;
use crate::sim::{Action, Env, ACTION_DIM};
use crate::task_space::TaskDescriptor;

/// Shape and bounds of a box-shaped space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub shape: Vec<usize>,
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub success: bool,
    pub stage: Stage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone)]
pub struct TaskEnv {
    env: Env,
    include_descriptor: bool,
    seed: u64,
    episodes: u64,
}

impl TaskEnv {
    /// `task` is a canonical name such as `IIWA_Box_None_PickPlace`.
    pub fn new(task: &str, include_descriptor: bool, seed: u64) -> Result<Self> {
        let task: TaskDescriptor = task.parse()?;
        Self::from_arena(Arena::new(task)?, include_descriptor, seed)
    }

    pub fn from_arena(arena: Arena, include_descriptor: bool, seed: u64) -> Result<Self> {
        Ok(Self { env: Env::new(arena, seed), include_descriptor, seed, episodes: 0 })
    }

    pub fn task(&self) -> TaskDescriptor {
        self.env.arena().task
    }

    pub fn observation_space(&self) -> SpaceSpec {
        let n = if self.include_descriptor { OBS_LEN } else { STATE_LEN };
        SpaceSpec { shape: vec![n], low: f64::NEG_INFINITY, high: f64::INFINITY }
    }

    pub fn action_space(&self) -> SpaceSpec {
        SpaceSpec { shape: vec![ACTION_DIM], low: -1.0, high: 1.0 }
    }

    /// Starts a new episode. The n-th reset of an env created with seed `s`
    /// uses episode seed `s + n`.
    pub fn reset(&mut self) -> Vec<f64> {
        let seed = self.seed.wrapping_add(self.episodes);
        self.episodes += 1;
        self.env.reset(seed);
        self.observation()
    }

    pub fn observation(&self) -> Vec<f64> {
        observe(self.env.arena(), self.env.state(), self.include_descriptor)
    }

    pub fn step(&mut self, action: &[f64]) -> Result<Transition> {
        let a = Action::from_normalized(self.env.arena(), action)?;
        let r = self.env.step(&a)?;
        Ok(Transition {
            observation: self.observation(),
            reward: r.report.reward,
            done: r.done(),
            info: StepInfo { success: r.report.success, stage: r.report.active_stage },
        })
    }
}
