//! Training loops for the three agent kinds, with resumable state.

use std::path::Path;

use armsuite_core::{Arena, ArenaConfig, BenchmarkSplit, TaskDescriptor};
use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AgentError, Result};
use crate::gae::normalize;
use crate::policy::{ActorCritic, AgentKind};
use crate::ppo::{ppo_update, Adam, Batch, PpoConfig, UpdateStats};
use crate::rollout::{collect, derive_seed, TaskRollout};

/// One learning-curve point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub agent: AgentKind,
    /// Task name for single-task runs, split id otherwise.
    pub run_id: String,
    /// Environment steps per task so far.
    pub steps: usize,
    pub mean_return: f64,
    pub success_rate: f64,
    pub seed: u64,
}

/// A trained model together with what it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: AgentKind,
    pub model: ActorCritic,
    pub tasks: Vec<TaskDescriptor>,
    /// Split the training tasks came from, if any.
    pub split_id: Option<String>,
    pub seed: u64,
    pub curves: Vec<CurveRecord>,
}

/// Complete training state; serializes to a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trainer {
    pub kind: AgentKind,
    pub tasks: Vec<TaskDescriptor>,
    pub split_id: Option<String>,
    pub run_id: String,
    pub seed: u64,
    pub config: PpoConfig,
    pub arena_config: ArenaConfig,
    /// Collect tasks one after another instead of in parallel.
    pub deterministic: bool,
    pub model: ActorCritic,
    pub pi_opt: Adam,
    pub v_opt: Adam,
    pub updates_done: usize,
    pub curves: Vec<CurveRecord>,
    pub last_stats: Option<UpdateStats>,
}

impl Trainer {
    pub fn new(
        kind: AgentKind,
        tasks: Vec<TaskDescriptor>,
        split_id: Option<String>,
        config: PpoConfig,
        arena_config: ArenaConfig,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        arena_config.validate()?;
        if tasks.is_empty() {
            return Err(AgentError::InvalidConfig("no training tasks".into()));
        }
        if kind == AgentKind::SingleTask && tasks.len() != 1 {
            return Err(AgentError::InvalidConfig(format!("a single-task agent trains on one task, got {}", tasks.len())));
        }
        let hidden = if kind == AgentKind::SingleTask { config.hidden_single } else { config.hidden_multi };
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, 0x1417]));
        let model = ActorCritic::new(kind, hidden, &mut rng)?;
        let run_id = match (&split_id, kind) {
            (_, AgentKind::SingleTask) => tasks[0].name(),
            (Some(id), _) => id.clone(),
            (None, _) => "custom".into(),
        };
        Ok(Self {
            kind,
            pi_opt: Adam::new(model.pi_params.len(), config.pi_lr),
            v_opt: Adam::new(model.v_params.len(), config.v_lr),
            tasks,
            split_id,
            run_id,
            seed,
            config,
            arena_config,
            deterministic: false,
            model,
            updates_done: 0,
            curves: Vec::new(),
            last_stats: None,
        })
    }

    pub fn is_finished(&self) -> bool {
        self.updates_done >= self.config.num_updates()
    }

    /// Steps each task has contributed so far.
    pub fn steps_per_task_done(&self) -> usize {
        self.updates_done * self.config.steps_per_task
    }

    fn gather(&self) -> Result<Vec<TaskRollout>> {
        let arenas = self
            .tasks
            .iter()
            .map(|&t| Arena::with_config(self.arena_config.clone(), t))
            .collect::<armsuite_core::Result<Vec<_>>>()?;
        let job = |a: &Arena| {
            let seed = derive_seed(&[self.seed, a.task.id() as u64, self.updates_done as u64]);
            collect(&self.model, a, self.config.steps_per_task, &self.config, seed)
        };
        if self.deterministic {
            arenas.iter().map(job).collect()
        } else {
            arenas.par_iter().map(job).collect()
        }
    }

    /// Collects one batch from every task and applies one PPO update.
    pub fn update(&mut self) -> Result<UpdateStats> {
        let rollouts = self.gather()?;
        let d = self.model.obs_dim();
        let n: usize = rollouts.iter().map(TaskRollout::len).sum();
        let mut obs = Vec::with_capacity(n * d);
        let mut act = Vec::with_capacity(n * 8);
        let (mut logp, mut adv, mut ret) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for r in &rollouts {
            obs.extend_from_slice(&r.obs);
            act.extend_from_slice(&r.act);
            logp.extend_from_slice(&r.logp);
            adv.extend_from_slice(&r.adv);
            ret.extend_from_slice(&r.ret);
        }
        normalize(&mut adv);
        let batch = Batch {
            obs: Array2::from_shape_vec((n, d), obs).map_err(|e| AgentError::Shape(e.to_string()))?,
            act: Array2::from_shape_vec((n, 8), act).map_err(|e| AgentError::Shape(e.to_string()))?,
            logp_old: Array1::from(logp),
            adv: Array1::from(adv),
            ret: Array1::from(ret),
        };
        let stats = ppo_update(&mut self.model, &mut self.pi_opt, &mut self.v_opt, &batch, &self.config)?;
        self.updates_done += 1;

        let episodes: Vec<_> = rollouts.iter().flat_map(|r| r.episodes.iter()).collect();
        let count = episodes.len().max(1) as f64;
        self.curves.push(CurveRecord {
            agent: self.kind,
            run_id: self.run_id.clone(),
            steps: self.steps_per_task_done(),
            mean_return: episodes.iter().map(|e| e.ret).sum::<f64>() / count,
            success_rate: episodes.iter().filter(|e| e.success).count() as f64 / count,
            seed: self.seed,
        });
        self.last_stats = Some(stats);
        Ok(stats)
    }

    /// Trains to completion, writing a checkpoint after every update when a path is given.
    pub fn run(&mut self, checkpoint: Option<&Path>) -> Result<()> {
        while !self.is_finished() {
            self.update()?;
            if let Some(path) = checkpoint {
                self.save(path)?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_vec(self)?)?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let t: Trainer = serde_json::from_slice(&bytes).map_err(|e| AgentError::Checkpoint(format!("{}: {e}", path.display())))?;
        if t.model.pi_params.len() != t.model.pi.num_params() || t.model.v_params.len() != t.model.v.num_params() {
            return Err(AgentError::Checkpoint(format!("{}: parameter count does not match network", path.display())));
        }
        Ok(t)
    }

    pub fn into_trained(self) -> TrainedModel {
        TrainedModel {
            kind: self.kind,
            model: self.model,
            tasks: self.tasks,
            split_id: self.split_id,
            seed: self.seed,
            curves: self.curves,
        }
    }
}

/// Trainers for a split: one per training task for single-task agents, one shared otherwise.
pub fn trainers_for_split(
    kind: AgentKind,
    split: &BenchmarkSplit,
    config: &PpoConfig,
    arena_config: &ArenaConfig,
    seed: u64,
) -> Result<Vec<Trainer>> {
    let id = Some(split.id());
    match kind {
        AgentKind::SingleTask => split
            .train
            .iter()
            .map(|&t| Trainer::new(kind, vec![t], id.clone(), config.clone(), arena_config.clone(), seed))
            .collect(),
        _ => Ok(vec![Trainer::new(kind, split.train.clone(), id, config.clone(), arena_config.clone(), seed)?]),
    }
}

pub fn train(kind: AgentKind, split: &BenchmarkSplit, config: &PpoConfig, seed: u64) -> Result<Vec<TrainedModel>> {
    trainers_for_split(kind, split, config, &ArenaConfig::default(), seed)?
        .into_iter()
        .map(|mut t| {
            t.run(None)?;
            Ok(t.into_trained())
        })
        .collect()
}
