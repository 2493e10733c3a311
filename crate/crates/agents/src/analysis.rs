//! Post-hoc analyses over evaluation results: shared-element breakdown,
//! best-matching-policy R², descriptor-swap ranking and max-success aggregation.

use std::collections::BTreeMap;

use armsuite_core::task_space::{Axis, AxisElement};
use armsuite_core::{ArenaConfig, BenchmarkSplit, SplitKind, TaskDescriptor};
use serde::{Deserialize, Serialize};

use crate::error::{AgentError, Result};
use crate::eval::{evaluate_cases, EvalResult, Trajectory};
use crate::policy::ActorCritic;
use crate::train::TrainedModel;

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBreakdown {
    pub axis: Axis,
    /// Test tasks sharing this axis's element with the restricted training task.
    pub trained_mean: Option<f64>,
    pub trained_count: usize,
    pub untrained_mean: Option<f64>,
    pub untrained_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub fixed_element: AxisElement,
    pub train_task: TaskDescriptor,
    pub axes: Vec<AxisBreakdown>,
}

/// Zero-shot success on a restricted split, split by whether each test task
/// shares an element with the single training task containing the fixed element.
pub fn shared_element_breakdown(result: &EvalResult, split: &BenchmarkSplit) -> Result<Breakdown> {
    let (Some(fixed), Some(train_task)) = (split.fixed_element, split.restricted_train_task()) else {
        return Err(AgentError::NotRestricted(split.kind.to_string()));
    };
    if split.kind != SplitKind::Restricted {
        return Err(AgentError::NotRestricted(split.kind.to_string()));
    }
    let axes = Axis::ALL
        .into_iter()
        .filter(|&a| a != fixed.axis)
        .map(|axis| {
            let (mut yes, mut no) = (Vec::new(), Vec::new());
            for t in result.per_task.iter().filter(|t| split.test.contains(&t.task)) {
                if t.task.element(axis) == train_task.element(axis) {
                    yes.push(t.success_rate);
                } else {
                    no.push(t.success_rate);
                }
            }
            AxisBreakdown {
                axis,
                trained_mean: mean(&yes),
                trained_count: yes.len(),
                untrained_mean: mean(&no),
                untrained_count: no.len(),
            }
        })
        .collect();
    Ok(Breakdown { fixed_element: fixed, train_task, axes })
}

/// Coefficient of determination of the least-squares line fitting `y` from `x`.
/// Zero when `x` or `y` has no variance.
pub fn r_squared(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(AgentError::Shape(format!("{} predictors for {} targets", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(AgentError::TooFewTasks(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - (intercept + slope * a)).powi(2)).sum();
    Ok(1.0 - ss_res / syy)
}

/// Success of a single-task policy (trained on `policy_task`) run on `test_task`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborEval {
    pub policy_task: TaskDescriptor,
    pub test_task: TaskDescriptor,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R2Point {
    pub task: TaskDescriptor,
    pub best_policy: TaskDescriptor,
    pub best_success: f64,
    pub zero_shot_success: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R2Report {
    pub agent_id: String,
    pub r2: f64,
    pub points: Vec<R2Point>,
    /// Tasks with zero-shot success but no single-element neighbor among the policies.
    pub without_neighbor: Vec<TaskDescriptor>,
}

/// For every test task with nonzero zero-shot success, picks the best
/// single-task policy that differs from it in exactly one element, then
/// computes R² between the two success rates across tasks.
pub fn best_matching_policy_r2(zero_shot: &EvalResult, neighbors: &[NeighborEval]) -> Result<R2Report> {
    let mut points = Vec::new();
    let mut without_neighbor = Vec::new();
    for t in zero_shot.per_task.iter().filter(|t| t.success_rate > 0.0) {
        let best = neighbors
            .iter()
            .filter(|n| n.test_task == t.task && n.policy_task.hamming(&t.task) == 1)
            .fold(None::<&NeighborEval>, |best, n| match best {
                Some(b) if b.success_rate >= n.success_rate => Some(b),
                _ => Some(n),
            });
        match best {
            Some(b) => points.push(R2Point {
                task: t.task,
                best_policy: b.policy_task,
                best_success: b.success_rate,
                zero_shot_success: t.success_rate,
            }),
            None => without_neighbor.push(t.task),
        }
    }
    let x: Vec<f64> = points.iter().map(|p| p.best_success).collect();
    let y: Vec<f64> = points.iter().map(|p| p.zero_shot_success).collect();
    let r2 = r_squared(&x, &y)?;
    Ok(R2Report { agent_id: zero_shot.agent_id.clone(), r2, points, without_neighbor })
}

/// Runs each single-task model on every test task one element away from its training task.
pub fn neighbor_evaluations(
    single: &[TrainedModel],
    test_tasks: &[TaskDescriptor],
    episodes: usize,
    seed: u64,
    arena_config: &ArenaConfig,
) -> Result<Vec<NeighborEval>> {
    let mut out = Vec::new();
    for m in single {
        let Some(&policy_task) = m.tasks.first() else { continue };
        let cases: Vec<_> = test_tasks.iter().filter(|t| t.hamming(&policy_task) == 1).map(|&t| (t, t)).collect();
        if cases.is_empty() {
            continue;
        }
        for trajs in evaluate_cases(&m.model, &cases, episodes, seed, arena_config)? {
            let test_task = trajs[0].task;
            let success_rate = trajs.iter().filter(|t| t.success()).count() as f64 / trajs.len() as f64;
            out.push(NeighborEval { policy_task, test_task, success_rate });
        }
    }
    Ok(out)
}

/// Performance of a model on `task` when shown `descriptor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapEntry {
    pub task: TaskDescriptor,
    pub descriptor: TaskDescriptor,
    pub mean_return: f64,
    pub success_rate: f64,
}

/// Per-axis curves indexed by rank; rank 0 is the correct descriptor and
/// ranks 1.. are the substitutes sorted best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapCurve {
    pub axis: Axis,
    pub mean_return: Vec<f64>,
    pub success_rate: Vec<f64>,
}

fn ranked(correct: f64, mut subs: Vec<f64>) -> Vec<f64> {
    subs.sort_by(|a, b| b.total_cmp(a));
    std::iter::once(correct).chain(subs).collect()
}

/// Averages rank-sorted performances across tasks. Entries whose descriptor
/// differs from the task in more than one element are ignored.
pub fn swap_curves(entries: &[SwapEntry]) -> Vec<SwapCurve> {
    let mut tasks: Vec<TaskDescriptor> = entries.iter().map(|e| e.task).collect();
    tasks.sort();
    tasks.dedup();
    Axis::ALL
        .into_iter()
        .map(|axis| {
            let mut ret_rows = Vec::new();
            let mut suc_rows = Vec::new();
            for task in &tasks {
                let Some(correct) = entries.iter().find(|e| e.task == *task && e.descriptor == *task) else { continue };
                let subs: Vec<&SwapEntry> = entries
                    .iter()
                    .filter(|e| e.task == *task && e.descriptor.hamming(task) == 1 && e.descriptor.element(axis) != task.element(axis))
                    .collect();
                ret_rows.push(ranked(correct.mean_return, subs.iter().map(|e| e.mean_return).collect()));
                suc_rows.push(ranked(correct.success_rate, subs.iter().map(|e| e.success_rate).collect()));
            }
            SwapCurve { axis, mean_return: column_means(&ret_rows), success_rate: column_means(&suc_rows) }
        })
        .collect()
}

fn column_means(rows: &[Vec<f64>]) -> Vec<f64> {
    let width = rows.iter().map(Vec::len).max().unwrap_or(0);
    (0..width)
        .map(|k| {
            let col: Vec<f64> = rows.iter().filter_map(|r| r.get(k).copied()).collect();
            mean(&col).unwrap_or(0.0)
        })
        .collect()
}

/// Evaluates `model` on each task with its correct descriptor and with every
/// single-element substitute.
pub fn descriptor_swap_entries(
    model: &ActorCritic,
    tasks: &[TaskDescriptor],
    episodes: usize,
    seed: u64,
    arena_config: &ArenaConfig,
) -> Result<Vec<SwapEntry>> {
    if !model.kind.uses_descriptor() {
        return Err(AgentError::SingleTaskZeroShot);
    }
    let mut cases = Vec::new();
    for &t in tasks {
        cases.push((t, t));
        for axis in Axis::ALL {
            for e in 0..4 {
                let el = AxisElement::new(axis, e)?;
                if !t.contains(el) {
                    cases.push((t, t.with_element(el)));
                }
            }
        }
    }
    let results = evaluate_cases(model, &cases, episodes, seed, arena_config)?;
    Ok(cases
        .iter()
        .zip(results)
        .map(|(&(task, descriptor), trajs)| SwapEntry {
            task,
            descriptor,
            mean_return: trajs.iter().map(Trajectory::ret).sum::<f64>() / trajs.len() as f64,
            success_rate: trajs.iter().filter(|t| t.success()).count() as f64 / trajs.len() as f64,
        })
        .collect())
}

pub fn descriptor_swap_ranking(model: &ActorCritic, tasks: &[TaskDescriptor], episodes: usize, seed: u64) -> Result<Vec<SwapCurve>> {
    Ok(swap_curves(&descriptor_swap_entries(model, tasks, episodes, seed, &ArenaConfig::default())?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxSuccess {
    pub per_task: BTreeMap<TaskDescriptor, f64>,
    /// Tasks no model ever solved.
    pub flagged: Vec<TaskDescriptor>,
    /// Expected tasks with no result at all.
    pub missing: Vec<TaskDescriptor>,
}

/// Per-task maximum success over all results.
pub fn max_success_per_task(results: &[EvalResult], expected: &[TaskDescriptor]) -> MaxSuccess {
    let mut per_task: BTreeMap<TaskDescriptor, f64> = BTreeMap::new();
    for t in results.iter().flat_map(|r| &r.per_task) {
        let e = per_task.entry(t.task).or_insert(t.success_rate);
        *e = e.max(t.success_rate);
    }
    let flagged = per_task.iter().filter(|(_, &v)| v == 0.0).map(|(t, _)| *t).collect();
    let missing = expected.iter().filter(|t| !per_task.contains_key(t)).copied().collect();
    MaxSuccess { per_task, flagged, missing }
}
