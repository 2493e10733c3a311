//! Run directory layout and the train/eval/zeroshot/analyze commands.
//!
//! ```text
//! <dir>/config.json              resolved experiment config
//! <dir>/split.json               split manifest
//! <dir>/checkpoints/<job>.json   trainer state, rewritten after every update
//! <dir>/models/<job>.json        finished models
//! <dir>/curves.csv               learning curves of every job
//! <dir>/eval.json                training-task evaluation, one result per agent and seed
//! <dir>/zeroshot.json            held-out evaluation, one result per agent and seed
//! <dir>/trajectories/*.csv       per-step rewards behind the two files above
//! <dir>/analysis/*.json          r2, swap, maxsuccess, breakdown
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use armsuite_agents::analysis::{
    best_matching_policy_r2, descriptor_swap_entries, max_success_per_task, neighbor_evaluations, shared_element_breakdown, swap_curves,
    Breakdown, MaxSuccess, R2Report, SwapCurve,
};
use armsuite_agents::eval::{check_zero_shot, evaluate_with_config, EvalResult, Trajectory};
use armsuite_agents::persist::{append_curves, read_json, write_json, write_trajectories};
use armsuite_agents::rollout::derive_seed;
use armsuite_agents::train::trainers_for_split;
use armsuite_agents::{AgentKind, TrainedModel, Trainer};
use armsuite_core::task_space::enumerate_tasks;
use armsuite_core::{BenchmarkSplit, SplitKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::failure::Failure;

/// Salt separating evaluation episode seeds from training seeds.
const EVAL_SALT: u64 = 0xe7a1;

pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn require(&self, rel: &str) -> Result<PathBuf> {
        let p = self.path(rel);
        if !p.exists() {
            return Err(Failure::MissingArtifact(format!("{} (run `train` first?)", p.display())).into());
        }
        Ok(p)
    }

    pub fn config(&self) -> Result<ExperimentConfig> {
        let p = self.require("config.json")?;
        let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
        let c: ExperimentConfig = serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
        Ok(c)
    }

    pub fn split(&self) -> Result<BenchmarkSplit> {
        let p = self.require("split.json")?;
        let text = std::fs::read_to_string(&p)?;
        Ok(BenchmarkSplit::from_json(&text).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?)
    }

    /// Finished models in file-name order.
    pub fn models(&self) -> Result<Vec<TrainedModel>> {
        let dir = self.require("models")?;
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        paths.retain(|p| p.extension().is_some_and(|x| x == "json"));
        paths.sort();
        if paths.is_empty() {
            return Err(Failure::MissingArtifact(format!("no models in {}", dir.display())).into());
        }
        paths.iter().map(|p| Ok(read_json(p).with_context(|| format!("reading {}", p.display()))?)).collect()
    }

    pub fn results(&self, name: &str) -> Result<Vec<EvalResult>> {
        let p = self.require(name)?;
        Ok(read_json(&p).with_context(|| format!("reading {}", p.display()))?)
    }
}

fn job_name(t: &Trainer) -> String {
    match t.kind {
        AgentKind::SingleTask => format!("{}-s{}-{}", t.kind, t.seed, t.tasks[0]),
        _ => format!("{}-s{}", t.kind, t.seed),
    }
}

fn agent_id(kind: AgentKind, seed: u64) -> String {
    format!("{kind}-s{seed}")
}

/// Writes `value` as JSON unless the file already holds something else.
fn write_or_match<T: Serialize + for<'de> Deserialize<'de> + PartialEq>(path: &Path, value: &T, what: &str) -> Result<()> {
    if path.exists() {
        let existing: T = read_json(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        if existing != *value {
            return Err(Failure::Config(format!(
                "{} holds a different {what}; use a fresh output directory",
                path.display()
            ))
            .into());
        }
        return Ok(());
    }
    write_json(path, value)?;
    Ok(())
}

/// Trains every agent and seed in the config, resuming from checkpoints.
pub fn train(dir: &RunDir, cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    std::fs::create_dir_all(dir.path("checkpoints"))?;
    std::fs::create_dir_all(dir.path("models"))?;
    write_or_match(&dir.path("config.json"), cfg, "experiment config")?;
    let split = cfg.split()?;
    write_or_match(&dir.path("split.json"), &split, "split")?;

    let mut jobs = Vec::new();
    for &agent in &cfg.agents {
        for &seed in &cfg.seeds {
            for mut t in trainers_for_split(agent, &split, &cfg.ppo, &cfg.arena, seed)? {
                t.deterministic = cfg.deterministic;
                jobs.push(t);
            }
        }
    }
    eprintln!("{} training jobs on {} tasks ({} updates each)", jobs.len(), split.train.len(), cfg.ppo.num_updates());

    let run_job = |fresh: Trainer| -> Result<TrainedModel> {
        let name = job_name(&fresh);
        let model_path = dir.path(&format!("models/{name}.json"));
        if model_path.exists() {
            return Ok(read_json(&model_path)?);
        }
        let ckpt = dir.path(&format!("checkpoints/{name}.json"));
        let mut t = if ckpt.exists() {
            let t = Trainer::load(&ckpt)?;
            if t.config != fresh.config || t.tasks != fresh.tasks || t.seed != fresh.seed || t.arena_config != fresh.arena_config {
                return Err(Failure::Config(format!("{} does not match the experiment config", ckpt.display())).into());
            }
            eprintln!("{name}: resuming at update {}", t.updates_done);
            t
        } else {
            fresh
        };
        let total = t.config.num_updates();
        while !t.is_finished() {
            let stats = t.update().with_context(|| format!("{name}: update {}", t.updates_done + 1))?;
            t.save(&ckpt)?;
            let c = t.curves.last().expect("update records a curve point");
            eprintln!(
                "{name}: update {}/{} return {:.2} success {:.3} kl {:.4}",
                t.updates_done, total, c.mean_return, c.success_rate, stats.kl
            );
        }
        let trained = t.into_trained();
        write_json(&model_path, &trained)?;
        Ok(trained)
    };
    let models: Vec<TrainedModel> = if cfg.deterministic {
        jobs.into_iter().map(run_job).collect::<Result<_>>()?
    } else {
        jobs.into_par_iter().map(run_job).collect::<Result<_>>()?
    };

    let curves_path = dir.path("curves.csv");
    if curves_path.exists() {
        std::fs::remove_file(&curves_path)?;
    }
    let records: Vec<_> = models.iter().flat_map(|m| m.curves.iter().cloned()).collect();
    append_curves(&curves_path, &records)?;
    eprintln!("wrote {} models and {}", models.len(), curves_path.display());
    Ok(())
}

/// Groups models by agent and seed, keeping config order.
fn by_agent_seed(models: Vec<TrainedModel>) -> BTreeMap<(AgentKind, u64), Vec<TrainedModel>> {
    let mut out: BTreeMap<(AgentKind, u64), Vec<TrainedModel>> = BTreeMap::new();
    for m in models {
        out.entry((m.kind, m.seed)).or_default().push(m);
    }
    out
}

fn save_results(dir: &RunDir, name: &str, results: &[(EvalResult, Vec<Trajectory>)]) -> Result<()> {
    std::fs::create_dir_all(dir.path("trajectories"))?;
    for (r, trajs) in results {
        write_trajectories(&dir.path(&format!("trajectories/{name}-{}.csv", r.agent_id)), trajs)?;
    }
    let summary: Vec<&EvalResult> = results.iter().map(|(r, _)| r).collect();
    write_json(&dir.path(&format!("{name}.json")), &summary)?;
    for r in &summary {
        println!("{name} {:<20} R {:>8.2}  S {:.3}  ({} tasks)", r.agent_id, r.r_bar, r.s_bar, r.per_task.len());
    }
    Ok(())
}

/// Evaluates every model on the tasks it trained on.
pub fn eval(dir: &RunDir) -> Result<()> {
    let cfg = dir.config()?;
    let mut out = Vec::new();
    for ((kind, seed), models) in by_agent_seed(dir.models()?) {
        let id = agent_id(kind, seed);
        let mut trajs = Vec::new();
        for m in &models {
            let (_, t) = evaluate_with_config(&m.model, &id, &m.tasks, cfg.eval_episodes, derive_seed(&[EVAL_SALT, seed]), &cfg.arena)?;
            trajs.extend(t);
        }
        let r = EvalResult::from_trajectories(kind, &id, seed, cfg.arena.horizon, &trajs);
        out.push((r, trajs));
    }
    save_results(dir, "eval", &out)
}

/// Evaluates descriptor-conditioned models on the held-out tasks.
pub fn zeroshot(dir: &RunDir) -> Result<()> {
    let cfg = dir.config()?;
    let split = dir.split()?;
    if split.test.is_empty() {
        return Err(Failure::Config("split has no test tasks".into()).into());
    }
    let mut out = Vec::new();
    for ((kind, seed), models) in by_agent_seed(dir.models()?) {
        if kind == AgentKind::SingleTask {
            eprintln!("skipping {kind}: no descriptor input, evaluated on training tasks only");
            continue;
        }
        for m in &models {
            check_zero_shot(m, &split)?;
            let id = agent_id(kind, seed);
            out.push(evaluate_with_config(&m.model, &id, &split.test, cfg.eval_episodes, derive_seed(&[EVAL_SALT, seed, 1]), &cfg.arena)?);
        }
    }
    if out.is_empty() {
        return Err(Failure::Config("no multi_task or compositional models to evaluate zero-shot".into()).into());
    }
    save_results(dir, "zeroshot", &out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R2Outcome {
    pub agent_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<R2Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub fn analyze_r2(dir: &RunDir) -> Result<Vec<R2Outcome>> {
    let cfg = dir.config()?;
    let zs = dir.results("zeroshot.json")?;
    let single: Vec<TrainedModel> = dir.models()?.into_iter().filter(|m| m.kind == AgentKind::SingleTask).collect();
    if single.is_empty() {
        return Err(Failure::MissingArtifact("single_task models are needed for the r2 analysis".into()).into());
    }
    let mut out = Vec::new();
    for r in &zs {
        let tasks: Vec<_> = r.per_task.iter().filter(|t| t.success_rate > 0.0).map(|t| t.task).collect();
        let same_seed: Vec<TrainedModel> = single.iter().filter(|m| m.seed == r.seed).cloned().collect();
        let pool = if same_seed.is_empty() { &single } else { &same_seed };
        let neighbors = neighbor_evaluations(pool, &tasks, cfg.eval_episodes, derive_seed(&[EVAL_SALT, r.seed, 2]), &cfg.arena)?;
        let outcome = match best_matching_policy_r2(r, &neighbors) {
            Ok(rep) => {
                println!("r2 {:<20} R² {:.4} over {} tasks", r.agent_id, rep.r2, rep.points.len());
                R2Outcome { agent_id: r.agent_id.clone(), report: Some(rep), note: None }
            }
            Err(e) => {
                println!("r2 {:<20} not computed: {e}", r.agent_id);
                R2Outcome { agent_id: r.agent_id.clone(), report: None, note: Some(e.to_string()) }
            }
        };
        out.push(outcome);
    }
    save_analysis(dir, "r2", &out)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapOutcome {
    pub agent_id: String,
    pub tasks: usize,
    pub curves: Vec<SwapCurve>,
}

/// Descriptor-swap curves on (up to `max_tasks` of) each model's training tasks.
pub fn analyze_swap(dir: &RunDir, max_tasks: Option<usize>) -> Result<Vec<SwapOutcome>> {
    let cfg = dir.config()?;
    let mut out = Vec::new();
    for m in dir.models()?.into_iter().filter(|m| m.kind.uses_descriptor()) {
        let n = max_tasks.unwrap_or(m.tasks.len()).min(m.tasks.len());
        let entries = descriptor_swap_entries(&m.model, &m.tasks[..n], cfg.eval_episodes, derive_seed(&[EVAL_SALT, m.seed, 3]), &cfg.arena)?;
        let curves = swap_curves(&entries);
        let id = agent_id(m.kind, m.seed);
        for c in &curves {
            let s: Vec<String> = c.success_rate.iter().map(|v| format!("{v:.3}")).collect();
            println!("swap {id:<20} {:<9} success by rank: {}", c.axis.to_string(), s.join(" "));
        }
        out.push(SwapOutcome { agent_id: id, tasks: n, curves });
    }
    if out.is_empty() {
        return Err(Failure::MissingArtifact("no descriptor-conditioned models for the swap analysis".into()).into());
    }
    save_analysis(dir, "swap", &out)?;
    Ok(out)
}

/// Per-task maximum success over every result in `dir` and `extra` run directories.
pub fn analyze_max_success(dir: &RunDir, extra: &[RunDir]) -> Result<MaxSuccess> {
    let mut results = Vec::new();
    for d in std::iter::once(dir).chain(extra) {
        let mut found = false;
        for name in ["eval.json", "zeroshot.json"] {
            if d.path(name).exists() {
                results.extend(d.results(name)?);
                found = true;
            }
        }
        if !found {
            return Err(Failure::MissingArtifact(format!("no eval.json or zeroshot.json in {}", d.root.display())).into());
        }
    }
    let ms = max_success_per_task(&results, &enumerate_tasks());
    println!(
        "maxsuccess: {} tasks evaluated, {} never solved, {} missing",
        ms.per_task.len(),
        ms.flagged.len(),
        ms.missing.len()
    );
    save_analysis(dir, "maxsuccess", &ms)?;
    Ok(ms)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownOutcome {
    pub agent_id: String,
    pub breakdown: Breakdown,
}

pub fn analyze_breakdown(dir: &RunDir) -> Result<Vec<BreakdownOutcome>> {
    let split = dir.split()?;
    if split.kind != SplitKind::Restricted {
        return Err(Failure::Config(format!("breakdown needs a restricted benchmark, this run uses {}", split.kind)).into());
    }
    let mut out = Vec::new();
    for r in dir.results("zeroshot.json")? {
        let b = shared_element_breakdown(&r, &split)?;
        for a in &b.axes {
            let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
            println!(
                "breakdown {:<20} {:<9} shared {} ({})  not shared {} ({})",
                r.agent_id,
                a.axis.to_string(),
                f(a.trained_mean),
                a.trained_count,
                f(a.untrained_mean),
                a.untrained_count
            );
        }
        out.push(BreakdownOutcome { agent_id: r.agent_id.clone(), breakdown: b });
    }
    save_analysis(dir, "breakdown", &out)?;
    Ok(out)
}

fn save_analysis<T: Serialize>(dir: &RunDir, name: &str, value: &T) -> Result<()> {
    std::fs::create_dir_all(dir.path("analysis"))?;
    write_json(&dir.path(&format!("analysis/{name}.json")), value)?;
    Ok(())
}
