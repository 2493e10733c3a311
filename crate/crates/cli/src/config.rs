//! Experiment configuration file and its command-line overrides.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use armsuite_agents::{AgentKind, PpoConfig};
use armsuite_core::task_space::make_split;
use armsuite_core::{ArenaConfig, AxisElement, BenchmarkSplit, SplitKind};
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

/// Training tasks for the full benchmark when `train_count` is not given.
pub const FULL_DEFAULT_TRAIN: usize = 56;

/// `full`, `smaller_scale:<element>` or `restricted:<element>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Benchmark {
    Full,
    SmallerScale(AxisElement),
    Restricted(AxisElement),
}

impl Benchmark {
    pub fn kind(self) -> SplitKind {
        match self {
            Benchmark::Full => SplitKind::Uniform,
            Benchmark::SmallerScale(_) => SplitKind::SmallerScale,
            Benchmark::Restricted(_) => SplitKind::Restricted,
        }
    }

    pub fn element(self) -> Option<AxisElement> {
        match self {
            Benchmark::Full => None,
            Benchmark::SmallerScale(e) | Benchmark::Restricted(e) => Some(e),
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Benchmark::Full => f.write_str("full"),
            Benchmark::SmallerScale(e) => write!(f, "smaller_scale:{e}"),
            Benchmark::Restricted(e) => write!(f, "restricted:{e}"),
        }
    }
}

impl FromStr for Benchmark {
    type Err = Failure;

    fn from_str(s: &str) -> Result<Self, Failure> {
        let (kind, name) = match s.split_once(':') {
            Some((k, e)) => (k, Some(e)),
            None => (s, None),
        };
        let element = || -> Result<AxisElement, Failure> {
            let e = name.ok_or_else(|| {
                Failure::Config(format!("benchmark `{s}` needs an element, e.g. `{kind}:IIWA`; valid elements are: {}", AxisElement::valid_names()))
            })?;
            e.parse().map_err(|err: armsuite_core::Error| Failure::Config(err.to_string()))
        };
        match kind.to_ascii_lowercase().replace('-', "_").as_str() {
            "full" | "uniform" if name.is_none() => Ok(Benchmark::Full),
            "smaller_scale" | "smallerscale" => Ok(Benchmark::SmallerScale(element()?)),
            "restricted" => Ok(Benchmark::Restricted(element()?)),
            _ => Err(Failure::Config(format!(
                "unknown benchmark `{s}`; expected full, smaller_scale:<element> or restricted:<element>"
            ))),
        }
    }
}

impl Serialize for Benchmark {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Benchmark {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub benchmark: Benchmark,
    pub agents: Vec<AgentKind>,
    /// Training task count; the benchmark's default when absent.
    pub train_count: Option<usize>,
    pub split_seed: u64,
    pub seeds: Vec<u64>,
    pub ppo: PpoConfig,
    pub arena: ArenaConfig,
    /// Trajectories per task in evaluations.
    pub eval_episodes: usize,
    /// Collect and evaluate one task at a time.
    pub deterministic: bool,
    /// Written into the run directory for provenance; the directory itself is chosen on the command line.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            benchmark: Benchmark::Full,
            agents: AgentKind::ALL.to_vec(),
            train_count: None,
            split_seed: 0,
            seeds: vec![0, 1, 2],
            ppo: PpoConfig::default(),
            arena: ArenaConfig::default(),
            eval_episodes: armsuite_agents::eval::DEFAULT_EPISODES,
            deterministic: false,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), Failure> {
        if self.agents.is_empty() {
            return Err(Failure::Config("no agents configured".into()));
        }
        if self.seeds.is_empty() {
            return Err(Failure::Config("no seeds configured".into()));
        }
        if self.eval_episodes == 0 {
            return Err(Failure::Config("eval_episodes must be at least 1".into()));
        }
        let mut agents = self.agents.clone();
        agents.sort();
        agents.dedup();
        if agents.len() != self.agents.len() {
            return Err(Failure::Config("agents listed more than once".into()));
        }
        self.ppo.validate().map_err(|e| Failure::Config(e.to_string()))?;
        self.arena.validate().map_err(|e| Failure::Config(e.to_string()))?;
        self.split()?;
        Ok(())
    }

    pub fn split(&self) -> Result<BenchmarkSplit, Failure> {
        let count = match (self.benchmark, self.train_count) {
            (Benchmark::Full, None) => Some(FULL_DEFAULT_TRAIN),
            (_, c) => c,
        };
        make_split(self.benchmark.kind(), self.benchmark.element(), count, self.split_seed).map_err(|e| Failure::Config(e.to_string()))
    }
}
