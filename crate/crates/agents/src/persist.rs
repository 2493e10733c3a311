//! On-disk formats: trajectory and curve CSVs, JSON documents, SVG curve plots.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::OpenOptions;
use std::path::Path;

use armsuite_core::TaskDescriptor;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::eval::Trajectory;
use crate::policy::AgentKind;
use crate::train::CurveRecord;

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryRow {
    task: TaskDescriptor,
    seed: u64,
    t: usize,
    reward: f64,
    success_flag: u8,
}

pub fn write_trajectories(path: &Path, trajs: &[Trajectory]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for tr in trajs {
        for (t, &reward) in tr.rewards.iter().enumerate() {
            w.serialize(TrajectoryRow { task: tr.task, seed: tr.seed, t, reward, success_flag: u8::from(reward == 1.0) })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Rebuilds trajectories from rows; a new trajectory starts at every `t == 0`.
pub fn read_trajectories(path: &Path) -> Result<Vec<Trajectory>> {
    let mut out: Vec<Trajectory> = Vec::new();
    let mut counts: BTreeMap<TaskDescriptor, usize> = BTreeMap::new();
    for row in csv::Reader::from_path(path)?.deserialize() {
        let row: TrajectoryRow = row?;
        if row.t == 0 {
            let c = counts.entry(row.task).or_default();
            out.push(Trajectory { task: row.task, episode: *c, seed: row.seed, rewards: Vec::new() });
            *c += 1;
        }
        if let Some(last) = out.last_mut() {
            last.rewards.push(row.reward);
        }
    }
    Ok(out)
}

/// Appends curve records, writing the header only when the file is new or empty.
pub fn append_curves(path: &Path, records: &[CurveRecord]) -> Result<()> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_curves(path: &Path) -> Result<Vec<CurveRecord>> {
    let mut out = Vec::new();
    for r in csv::Reader::from_path(path)?.deserialize() {
        out.push(r?);
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}

const COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];

/// Mean of a metric at each step, per agent kind, averaged over runs and seeds.
fn series(records: &[CurveRecord], metric: fn(&CurveRecord) -> f64) -> BTreeMap<AgentKind, Vec<(f64, f64)>> {
    let mut acc: BTreeMap<AgentKind, BTreeMap<usize, (f64, usize)>> = BTreeMap::new();
    for r in records {
        let e = acc.entry(r.agent).or_default().entry(r.steps).or_insert((0.0, 0));
        e.0 += metric(r);
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(k, pts)| (k, pts.into_iter().map(|(s, (sum, n))| (s as f64, sum / n as f64)).collect()))
        .collect()
}

fn panel(out: &mut String, x0: f64, title: &str, data: &BTreeMap<AgentKind, Vec<(f64, f64)>>, y_max: Option<f64>) {
    let (w, h, pad) = (380.0, 260.0, 40.0);
    let xmax = data.values().flatten().map(|p| p.0).fold(1.0, f64::max);
    let ymax = y_max.unwrap_or_else(|| data.values().flatten().map(|p| p.1).fold(1e-9, f64::max));
    let ymin = data.values().flatten().map(|p| p.1).fold(0.0, f64::min);
    let sx = |x: f64| x0 + pad + x / xmax * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - ymin) / (ymax - ymin).max(1e-12) * (h - 2.0 * pad);
    let _ = writeln!(out, r#"<text x="{:.1}" y="20" font-size="14" text-anchor="middle">{title}</text>"#, x0 + w / 2.0);
    let _ = writeln!(
        out,
        r#"<rect x="{:.1}" y="{pad}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        x0 + pad,
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">steps per task (max {xmax:.0})</text>"#, x0 + w / 2.0, h - 10.0);
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="10">{ymax:.3}</text>"#, x0 + 2.0, pad + 4.0);
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="10">{ymin:.3}</text>"#, x0 + 2.0, h - pad);
    for (i, (kind, pts)) in data.iter().enumerate() {
        let color = COLORS[AgentKind::ALL.iter().position(|k| k == kind).unwrap_or(i) % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" fill="{color}">{kind}</text>"#,
            x0 + pad + 6.0,
            pad + 14.0 + 12.0 * i as f64
        );
    }
}

/// Two-panel plot: mean return and success rate against steps, one line per agent kind.
pub fn curves_svg(records: &[CurveRecord]) -> String {
    let mut out = String::new();
    out.push_str(r#"<svg xmlns="http://www.w3.org/2000/svg" width="760" height="260" font-family="sans-serif">"#);
    out.push('\n');
    panel(&mut out, 0.0, "Average return", &series(records, |r| r.mean_return), None);
    panel(&mut out, 380.0, "Success rate", &series(records, |r| r.success_rate), Some(1.0));
    out.push_str("</svg>\n");
    out
}
