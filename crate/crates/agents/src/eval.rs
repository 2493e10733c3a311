//! Deterministic evaluation and the aggregate return / success metrics.

use armsuite_core::observations::{observe, STATE_LEN};
use armsuite_core::sim::{reset, step, Action};
use armsuite_core::task_space::encode_multihot;
use armsuite_core::{Arena, ArenaConfig, BenchmarkSplit, TaskDescriptor};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AgentError, Result};
use crate::policy::{ActorCritic, AgentKind};
use crate::rollout::derive_seed;
use crate::train::TrainedModel;

/// Default number of evaluation episodes per task.
pub const DEFAULT_EPISODES: usize = 10;

/// Per-step rewards of one evaluation episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub task: TaskDescriptor,
    pub episode: usize,
    pub seed: u64,
    pub rewards: Vec<f64>,
}

impl Trajectory {
    pub fn ret(&self) -> f64 {
        self.rewards.iter().sum()
    }

    /// Whether any step reached the success reward.
    pub fn success(&self) -> bool {
        self.rewards.iter().any(|&r| r == 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskEval {
    pub task: TaskDescriptor,
    pub mean_return: f64,
    pub success_rate: f64,
    pub episodes: usize,
    pub horizon: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub agent: AgentKind,
    pub agent_id: String,
    pub seed: u64,
    pub per_task: Vec<TaskEval>,
    /// Mean cumulative return over all tasks and episodes.
    pub r_bar: f64,
    /// Fraction of episodes that reached success at some step.
    pub s_bar: f64,
}

impl EvalResult {
    pub fn task(&self, task: &TaskDescriptor) -> Option<&TaskEval> {
        self.per_task.iter().find(|t| &t.task == task)
    }

    /// Aggregates per-episode reward sequences. Tasks appear in order of first occurrence.
    pub fn from_trajectories(agent: AgentKind, agent_id: &str, seed: u64, horizon: usize, trajs: &[Trajectory]) -> Self {
        let mut order: Vec<TaskDescriptor> = Vec::new();
        for t in trajs {
            if !order.contains(&t.task) {
                order.push(t.task);
            }
        }
        let per_task = order
            .iter()
            .map(|task| {
                let mine: Vec<&Trajectory> = trajs.iter().filter(|t| &t.task == task).collect();
                let m = mine.len() as f64;
                TaskEval {
                    task: *task,
                    mean_return: flat_sum(mine.iter().copied()) / m,
                    success_rate: mine.iter().filter(|t| t.success()).count() as f64 / m,
                    episodes: mine.len(),
                    horizon,
                }
            })
            .collect();
        let n = trajs.len().max(1) as f64;
        Self {
            agent,
            agent_id: agent_id.to_string(),
            seed,
            per_task,
            r_bar: flat_sum(trajs.iter()) / n,
            s_bar: trajs.iter().filter(|t| t.success()).count() as f64 / n,
        }
    }
}

/// Sum of every reward of every trajectory, accumulated in order.
fn flat_sum<'a>(trajs: impl Iterator<Item = &'a Trajectory>) -> f64 {
    let mut total = 0.0;
    for t in trajs {
        for r in &t.rewards {
            total += r;
        }
    }
    total
}

/// Runs one episode with the policy mean. For descriptor-conditioned models
/// the descriptor segment is overwritten with `descriptor`.
pub fn run_episode(model: &ActorCritic, arena: &Arena, descriptor: TaskDescriptor, seed: u64) -> Result<Vec<f64>> {
    let include = model.kind.uses_descriptor();
    let mh = encode_multihot(&descriptor);
    let mut state = reset(arena, seed);
    let mut rewards = Vec::with_capacity(arena.horizon());
    loop {
        let mut obs = observe(arena, &state, include);
        if include {
            obs[STATE_LEN..].copy_from_slice(&mh);
        }
        let a = model.mean(&obs)?;
        let r = step(arena, &state, &Action::from_normalized(arena, &a)?)?;
        rewards.push(r.report.reward);
        let done = r.done();
        state = r.state;
        if done {
            return Ok(rewards);
        }
    }
}

/// Evaluation cases: the task the episode runs on and the descriptor shown to the model.
pub fn evaluate_cases(
    model: &ActorCritic,
    cases: &[(TaskDescriptor, TaskDescriptor)],
    episodes: usize,
    seed: u64,
    arena_config: &ArenaConfig,
) -> Result<Vec<Vec<Trajectory>>> {
    if episodes == 0 {
        return Err(AgentError::InvalidConfig("evaluation needs at least one episode per task".into()));
    }
    let before = model.param_hash();
    let out = cases
        .par_iter()
        .map(|&(task, descriptor)| {
            let arena = Arena::with_config(arena_config.clone(), task)?;
            (0..episodes)
                .map(|j| {
                    let s = derive_seed(&[seed, task.id() as u64, j as u64]);
                    Ok(Trajectory { task, episode: j, seed: s, rewards: run_episode(model, &arena, descriptor, s)? })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    if model.param_hash() != before {
        return Err(AgentError::ParametersMutated);
    }
    Ok(out)
}

/// Evaluates on `tasks` with correct descriptors; returns the aggregate and every trajectory.
pub fn evaluate_with_config(
    model: &ActorCritic,
    agent_id: &str,
    tasks: &[TaskDescriptor],
    episodes: usize,
    seed: u64,
    arena_config: &ArenaConfig,
) -> Result<(EvalResult, Vec<Trajectory>)> {
    let cases: Vec<_> = tasks.iter().map(|&t| (t, t)).collect();
    let trajs: Vec<Trajectory> = evaluate_cases(model, &cases, episodes, seed, arena_config)?.into_iter().flatten().collect();
    let res = EvalResult::from_trajectories(model.kind, agent_id, seed, arena_config.horizon, &trajs);
    Ok((res, trajs))
}

pub fn evaluate(model: &ActorCritic, tasks: &[TaskDescriptor], episodes: usize, seed: u64) -> Result<EvalResult> {
    let id = format!("{}-s{seed}", model.kind);
    Ok(evaluate_with_config(model, &id, tasks, episodes, seed, &ArenaConfig::default())?.0)
}

/// Checks that `trained` may be evaluated zero-shot on `split`.
pub fn check_zero_shot(trained: &TrainedModel, split: &BenchmarkSplit) -> Result<()> {
    if trained.kind == AgentKind::SingleTask {
        return Err(AgentError::SingleTaskZeroShot);
    }
    let id = split.id();
    match &trained.split_id {
        Some(m) if *m == id => Ok(()),
        other => Err(AgentError::ProvenanceMismatch { model: other.clone().unwrap_or_else(|| "none".into()), split: id }),
    }
}

/// Evaluates on the split's held-out tasks.
pub fn zero_shot(trained: &TrainedModel, split: &BenchmarkSplit, episodes: usize, seed: u64) -> Result<EvalResult> {
    check_zero_shot(trained, split)?;
    let id = format!("{}-s{}", trained.kind, trained.seed);
    Ok(evaluate_with_config(&trained.model, &id, &split.test, episodes, seed, &ArenaConfig::default())?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(task: usize, rewards: Vec<f64>) -> Trajectory {
        Trajectory { task: TaskDescriptor::from_id(task).unwrap(), episode: 0, seed: 0, rewards }
    }

    #[test]
    fn two_tasks_mean_return() {
        let r = EvalResult::from_trajectories(AgentKind::MultiTask, "x", 0, 2, &[traj(0, vec![10.0]), traj(1, vec![30.0])]);
        assert_eq!(r.r_bar, 20.0);
        assert_eq!(r.per_task.len(), 2);
    }

    #[test]
    fn success_anywhere_counts() {
        let r = EvalResult::from_trajectories(
            AgentKind::MultiTask,
            "x",
            0,
            3,
            &[traj(0, vec![0.1, 1.0, 0.2]), traj(0, vec![1.0, 0.0, 0.0])],
        );
        assert_eq!(r.s_bar, 1.0);
        assert_eq!(r.per_task[0].success_rate, 1.0);
    }
}
