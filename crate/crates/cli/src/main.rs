//! `armsuite` experiment driver.

mod config;
mod failure;
mod report;
mod run;

use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use armsuite_agents::AgentKind;
use armsuite_core::task_space::enumerate_tasks;
use armsuite_core::AxisElement;
use clap::{Parser, Subcommand};

use crate::config::{Benchmark, ExperimentConfig};
use crate::failure::{exit_code, Failure};
use crate::run::RunDir;

/// Default output root when neither `--output` nor the config names one.
const OUTPUT_ENV: &str = "ARMSUITE_OUTPUT";
const DEFAULT_OUTPUT: &str = "armsuite-runs/default";

#[derive(Parser)]
#[command(name = "armsuite", version, about = "Train and evaluate agents on the 256-task manipulation suite")]
struct Cli {
    /// Run directory [default: $ARMSUITE_OUTPUT, then armsuite-runs/default]
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads for training and evaluation
    #[arg(short, long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Overrides {
    /// Experiment config JSON; flags below override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// full, smaller_scale:<element> or restricted:<element>
    #[arg(long)]
    benchmark: Option<String>,
    /// Agent kinds to train (repeatable)
    #[arg(long = "agent")]
    agents: Vec<String>,
    #[arg(long)]
    train_count: Option<usize>,
    #[arg(long)]
    split_seed: Option<u64>,
    /// Training seeds (repeatable)
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    /// Environment steps per task over the whole run
    #[arg(long)]
    total_steps: Option<usize>,
    /// Environment steps per task per update
    #[arg(long)]
    steps_per_task: Option<usize>,
    #[arg(long)]
    eval_episodes: Option<usize>,
    /// Run jobs and tasks one at a time
    #[arg(long)]
    deterministic: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Print the 256 task names, optionally only those containing every given element
    ListTasks {
        #[arg(long = "element")]
        elements: Vec<String>,
    },
    /// Write split.json for a benchmark
    MakeSplit {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Train every configured agent and seed, resuming from checkpoints
    Train {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Evaluate trained models on their training tasks
    Eval,
    /// Evaluate multi-task and compositional models on the held-out tasks
    Zeroshot,
    /// Post-hoc analyses of a run directory
    Analyze {
        #[command(subcommand)]
        which: Analysis,
    },
    /// Summarise a run directory into report.md and curves.svg
    Report,
}

#[derive(Subcommand)]
enum Analysis {
    /// R² between zero-shot success and the best single-task neighbor policy
    R2,
    /// Performance when the task descriptor is swapped one element at a time
    Swap {
        /// Use only the first N training tasks of each model
        #[arg(long)]
        max_tasks: Option<usize>,
    },
    /// Per-task maximum success across this and other run directories
    Maxsuccess {
        #[arg(long = "include")]
        include: Vec<PathBuf>,
    },
    /// Restricted benchmarks: zero-shot success split by shared elements
    Breakdown,
}

fn resolve_config(o: &Overrides) -> Result<ExperimentConfig> {
    let mut c = match &o.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(b) = &o.benchmark {
        c.benchmark = b.parse::<Benchmark>()?;
    }
    if !o.agents.is_empty() {
        c.agents = o
            .agents
            .iter()
            .map(|a| a.parse::<AgentKind>().map_err(|e| Failure::Config(e.to_string())))
            .collect::<Result<_, _>>()?;
    }
    if o.train_count.is_some() {
        c.train_count = o.train_count;
    }
    if let Some(s) = o.split_seed {
        c.split_seed = s;
    }
    if !o.seeds.is_empty() {
        c.seeds = o.seeds.clone();
    }
    if let Some(n) = o.total_steps {
        c.ppo.total_steps_per_task = n;
    }
    if let Some(n) = o.steps_per_task {
        c.ppo.steps_per_task = n;
    }
    if let Some(n) = o.eval_episodes {
        c.eval_episodes = n;
    }
    c.deterministic |= o.deterministic;
    c.validate()?;
    Ok(c)
}

fn output_dir(cli: &Option<PathBuf>, cfg: Option<&ExperimentConfig>) -> PathBuf {
    cli.clone()
        .or_else(|| cfg.and_then(|c| c.output_dir.clone()))
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
}

fn list_tasks(elements: &[String]) -> Result<()> {
    let els: Vec<AxisElement> = elements
        .iter()
        .map(|e| e.parse().map_err(|err: armsuite_core::Error| Failure::Config(err.to_string())))
        .collect::<Result<_, _>>()?;
    let mut out = std::io::stdout().lock();
    for t in enumerate_tasks().iter().filter(|t| els.iter().all(|e| t.contains(*e))) {
        if let Err(e) = writeln!(out, "{t}") {
            // A closed pipe (e.g. `| head`) is not an error.
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                return Ok(());
            }
            return Err(e.into());
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Failure::Config("--jobs must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring worker threads")?;
    }
    match cli.command {
        Command::ListTasks { elements } => list_tasks(&elements),
        Command::MakeSplit { overrides } => {
            let cfg = resolve_config(&overrides)?;
            let dir = output_dir(&cli.output, Some(&cfg));
            std::fs::create_dir_all(&dir)?;
            let split = cfg.split()?;
            let path = dir.join("split.json");
            std::fs::write(&path, split.to_json()? + "\n")?;
            println!("{}: {} train, {} test -> {}", split.id(), split.train.len(), split.test.len(), path.display());
            Ok(())
        }
        Command::Train { overrides } => {
            let mut cfg = resolve_config(&overrides)?;
            let dir = RunDir::new(output_dir(&cli.output, Some(&cfg)));
            cfg.output_dir = None;
            run::train(&dir, &cfg)
        }
        Command::Eval => run::eval(&RunDir::new(output_dir(&cli.output, None))),
        Command::Zeroshot => run::zeroshot(&RunDir::new(output_dir(&cli.output, None))),
        Command::Analyze { which } => {
            let dir = RunDir::new(output_dir(&cli.output, None));
            match which {
                Analysis::R2 => run::analyze_r2(&dir).map(drop),
                Analysis::Swap { max_tasks } => run::analyze_swap(&dir, max_tasks).map(drop),
                Analysis::Maxsuccess { include } => {
                    let extra: Vec<RunDir> = include.into_iter().map(RunDir::new).collect();
                    run::analyze_max_success(&dir, &extra).map(drop)
                }
                Analysis::Breakdown => run::analyze_breakdown(&dir).map(drop),
            }
        }
        Command::Report => {
            let text = report::report(&RunDir::new(output_dir(&cli.output, None)))?;
            print!("{text}");
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = dispatch(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code(&err));
    }
}
