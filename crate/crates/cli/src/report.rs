//! Summary tables and learning-curve plot for a run directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::Result;
use armsuite_agents::eval::EvalResult;
use armsuite_agents::persist::{curves_svg, read_curves, read_json};
use armsuite_agents::AgentKind;

use crate::failure::Failure;
use crate::run::{BreakdownOutcome, R2Outcome, RunDir};

/// Mean and standard error of the mean (sample standard deviation over sqrt n).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn cell(xs: Option<&Vec<f64>>, digits: usize) -> String {
    match xs {
        Some(v) if !v.is_empty() => {
            let (m, se) = mean_stderr(v);
            format!("{m:.digits$} ± {se:.digits$}")
        }
        _ => "-".into(),
    }
}

type BySeed = BTreeMap<AgentKind, Vec<f64>>;

fn collect(results: &[EvalResult]) -> (BySeed, BySeed) {
    let (mut r, mut s) = (BySeed::new(), BySeed::new());
    for res in results {
        r.entry(res.agent).or_default().push(res.r_bar);
        s.entry(res.agent).or_default().push(res.s_bar);
    }
    (r, s)
}

/// Renders the report, writes `report.md` and `curves.svg`, and returns the text.
pub fn report(dir: &RunDir) -> Result<String> {
    let cfg = dir.config()?;
    let split = dir.split()?;
    let has = |name: &str| dir.path(name).exists();
    if !has("eval.json") && !has("curves.csv") {
        return Err(Failure::MissingArtifact(format!("{} has neither eval.json nor curves.csv", dir.root.display())).into());
    }

    let mut out = String::new();
    let _ = writeln!(out, "# Run summary\n");
    let _ = writeln!(out, "benchmark: {}  ", cfg.benchmark);
    let _ = writeln!(out, "split: {} ({} train, {} test tasks)  ", split.id(), split.train.len(), split.test.len());
    let seeds: Vec<String> = cfg.seeds.iter().map(u64::to_string).collect();
    let _ = writeln!(out, "seeds: {}  ", seeds.join(", "));
    let _ = writeln!(out, "steps per task: {}  ", cfg.ppo.num_updates() * cfg.ppo.steps_per_task);
    let _ = writeln!(out, "episodes per task: {}\n", cfg.eval_episodes);

    let train = if has("eval.json") { dir.results("eval.json")? } else { Vec::new() };
    let zs = if has("zeroshot.json") { dir.results("zeroshot.json")? } else { Vec::new() };
    let (tr, ts) = collect(&train);
    let (zr, zsr) = collect(&zs);
    let _ = writeln!(out, "Mean over seeds ± standard error.\n");
    let _ = writeln!(out, "| agent | train return | train success | zero-shot return | zero-shot success |");
    let _ = writeln!(out, "|---|---|---|---|---|");
    for kind in &cfg.agents {
        let _ = writeln!(
            out,
            "| {kind} | {} | {} | {} | {} |",
            cell(tr.get(kind), 2),
            cell(ts.get(kind), 3),
            cell(zr.get(kind), 2),
            cell(zsr.get(kind), 3)
        );
    }

    if has("analysis/r2.json") {
        let r2: Vec<R2Outcome> = read_json(&dir.path("analysis/r2.json"))?;
        let _ = writeln!(out, "\n## Best-matching single-task policy\n");
        let _ = writeln!(out, "| model | R² | tasks |");
        let _ = writeln!(out, "|---|---|---|");
        for o in &r2 {
            match (&o.report, &o.note) {
                (Some(r), _) => {
                    let _ = writeln!(out, "| {} | {:.3} | {} |", o.agent_id, r.r2, r.points.len());
                }
                (None, note) => {
                    let _ = writeln!(out, "| {} | - | {} |", o.agent_id, note.as_deref().unwrap_or(""));
                }
            }
        }
    }

    if has("analysis/breakdown.json") {
        let b: Vec<BreakdownOutcome> = read_json(&dir.path("analysis/breakdown.json"))?;
        let _ = writeln!(out, "\n## Zero-shot success by shared element\n");
        let _ = writeln!(out, "| model | axis | shared | not shared |");
        let _ = writeln!(out, "|---|---|---|---|");
        for o in &b {
            for a in &o.breakdown.axes {
                let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
                let _ = writeln!(out, "| {} | {} | {} | {} |", o.agent_id, a.axis, f(a.trained_mean), f(a.untrained_mean));
            }
        }
    }

    if has("curves.csv") {
        let curves = read_curves(&dir.path("curves.csv"))?;
        std::fs::write(dir.path("curves.svg"), curves_svg(&curves))?;
        let _ = writeln!(out, "\nLearning curves: curves.svg");
    }
    std::fs::write(dir.path("report.md"), &out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stderr_of_three_seeds() {
        let (m, se) = mean_stderr(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_stderr(&[4.0]), (4.0, 0.0));
    }
}
