//! `gravopt` command-line front end.
//!
//! Exit status: 0 on success, 1 when a run fails at runtime (objective
//! failures beyond the configured policy, I/O), 2 for usage or configuration
//! errors.
//!
//! Seeds are taken from `--seed`, then `GRAVOPT_SEED`, then the config file,
//! then the default of 42.

mod config;
mod metrics_cmd;
mod run_dir;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context};
use chrono::Utc;
use clap::{Args, Parser, Subcommand};
use gravopt::objectives::{
    memoize, Benchmark, BenchmarkFn, ExternalObjective, ToyTrainer, WorkerCommand,
};
use gravopt::{Gsa, GsaConfig, Objective, RunError, SearchSpace};
use serde_json::json;

use config::{ObjectiveKind, RunConfig, SEED_ENV};
use run_dir::{Manifest, Outcome, ResultDoc, RunDir};

#[derive(Parser)]
#[command(
    name = "gravopt",
    version,
    about = "Gravitational search for bounded black-box problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize an analytic test function over a box.
    Benchmark(BenchmarkArgs),
    /// Tune hyperparameters as described by a config file.
    Tune(TuneArgs),
    /// Report classification metrics for a CSV of true and predicted labels.
    EvaluateMetrics(metrics_cmd::MetricsArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Overrides GRAVOPT_SEED and the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Objective evaluations to run concurrently.
    #[arg(long)]
    parallelism: Option<usize>,
    /// Parent directory for run directories.
    #[arg(long, default_value = "runs")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long = "fn", value_parser = parse_fn)]
    func: BenchmarkFn,
    #[arg(long, default_value_t = 2)]
    dims: usize,
    /// Lower bound of every coordinate (function default if omitted).
    #[arg(long, allow_hyphen_values = true)]
    lower: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    upper: Option<f64>,
    /// `[gsa]` settings from a TOML or JSON file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    g0: Option<f64>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct TuneArgs {
    /// Run configuration (TOML, or JSON by extension). Defaults apply if omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Abort on the first evaluation that fails after retries.
    #[arg(long)]
    strict_failures: bool,
    #[command(flatten)]
    run: RunArgs,
}

fn parse_fn(s: &str) -> Result<BenchmarkFn, String> {
    s.parse()
}

/// Error split by exit status.
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

trait UsageContext<T> {
    fn usage(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> UsageContext<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Benchmark(args) => benchmark(args),
        Command::Tune(args) => tune(args),
        Command::EvaluateMetrics(args) => metrics_cmd::run(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn env_seed() -> Option<String> {
    std::env::var(SEED_ENV)
        .ok()
        .filter(|s| !s.trim().is_empty())
}

fn benchmark(args: BenchmarkArgs) -> Result<(), Failure> {
    let (mut gsa, file_seed) = match &args.config {
        Some(path) => {
            let loaded = config::load(path).usage()?;
            (loaded.config.gsa, loaded.seed)
        }
        None => (GsaConfig::default(), None),
    };
    gsa.seed = config::resolve_seed(args.run.seed, env_seed().as_deref(), file_seed).usage()?;
    if let Some(n) = args.population {
        gsa.population = n;
    }
    if let Some(n) = args.iterations {
        gsa.max_iterations = n;
    }
    if let Some(g0) = args.g0 {
        gsa.g0 = g0;
    }
    let (lo, hi) = args.func.default_bounds();
    let (lo, hi) = (args.lower.unwrap_or(lo), args.upper.unwrap_or(hi));
    if args.dims == 0 {
        return Err(Failure::Usage(anyhow!("--dims must be at least 1")));
    }
    let space = SearchSpace::uniform_box(args.dims, lo, hi).usage()?;
    gsa.validate().usage()?;

    let snapshot = json!({
        "gsa": gsa,
        "space": { "dims": args.dims, "lower": lo, "upper": hi },
        "objective": { "kind": "benchmark", "fn": args.func.name() },
    });
    let objective = Benchmark::new(args.func);
    execute(
        "benchmark",
        gsa,
        &space,
        &objective,
        Default::default(),
        args.run.parallelism.unwrap_or(1),
        &args.run.out_dir,
        snapshot,
        None,
    )
}

fn tune(args: TuneArgs) -> Result<(), Failure> {
    let (mut cfg, file_seed) = match &args.config {
        Some(path) => {
            let loaded = config::load(path).usage()?;
            (loaded.config, loaded.seed)
        }
        None => (RunConfig::default(), None),
    };
    cfg.gsa.seed = config::resolve_seed(args.run.seed, env_seed().as_deref(), file_seed).usage()?;
    if let Some(n) = args.run.parallelism {
        cfg.objective.parallelism = n;
    }
    if args.strict_failures {
        cfg.objective.strict = true;
    }
    cfg.validate().usage()?;
    let space = cfg.search_space().usage()?;
    let snapshot = serde_json::to_value(&cfg).context("serializing config")?;
    let toml_snapshot = cfg.to_toml()?;

    let spec = &cfg.objective;
    let objective: Box<dyn Objective> = match spec.kind {
        ObjectiveKind::ToyTrainer => {
            Box::new(memoize(ToyTrainer::new(spec.toy_trainer.clone()).usage()?))
        }
        ObjectiveKind::External => {
            let argv = spec.command.as_deref().unwrap_or_default();
            let command = WorkerCommand::from_argv(argv)
                .ok_or_else(|| Failure::Usage(anyhow!("empty worker command")))?;
            Box::new(memoize(ExternalObjective::new(
                command,
                cfg.gsa.sense,
                Duration::from_secs_f64(spec.timeout_secs),
                spec.parallelism,
            )))
        }
    };
    execute(
        "tune",
        cfg.gsa.clone(),
        &space,
        objective.as_ref(),
        spec.failure_policy(),
        spec.parallelism,
        &args.run.out_dir,
        snapshot,
        Some(&toml_snapshot),
    )
}

#[allow(clippy::too_many_arguments)]
fn execute(
    command: &'static str,
    gsa: GsaConfig,
    space: &SearchSpace,
    objective: &dyn Objective,
    policy: gravopt::FailurePolicy,
    parallelism: usize,
    out_dir: &Path,
    snapshot: serde_json::Value,
    toml_snapshot: Option<&str>,
) -> Result<(), Failure> {
    if parallelism < 1 {
        return Err(Failure::Usage(anyhow!("--parallelism must be at least 1")));
    }
    let seed = gsa.seed;
    let started = Utc::now();
    let mut dir = RunDir::create(out_dir, started, seed)?;
    if let Some(text) = toml_snapshot {
        dir.write_text("config.toml", text)?;
    }

    let driver = Gsa::new(gsa)
        .with_parallelism(parallelism)
        .with_failure_policy(policy);
    let mut log_error = None;
    let outcome = driver.run_logged(space, objective, |record| {
        if log_error.is_none() {
            log_error = dir.log_evaluation(record).err();
        }
    });
    if let Some(e) = log_error {
        return Err(e.context("writing evaluation log").into());
    }

    let mut manifest = Manifest {
        tool: "gravopt",
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed,
        parallelism,
        started: run_dir::timestamp(started),
        finished: String::new(),
        outcome: Outcome::Completed,
        error: None,
        config: snapshot,
    };
    match outcome {
        Ok(result) => {
            dir.write_history(space.len(), &result.history)?;
            dir.write_json(
                run_dir::RESULT,
                &ResultDoc {
                    best_params: &result.best_params,
                    best_fitness: result.best_fitness,
                    evaluations: result.evaluations,
                    cache_hits: result.cache_hits,
                    seed,
                },
            )?;
            manifest.finished = run_dir::timestamp(Utc::now());
            let path = dir.finish(&manifest)?;
            println!("best_fitness {}", result.best_fitness);
            println!("best_params  {}", result.best_params);
            println!(
                "evaluations  {} ({} cache hits)",
                result.evaluations, result.cache_hits
            );
            println!("run dir      {}", path.display());
            Ok(())
        }
        Err(RunError::Config(e)) => {
            // Nothing ran; do not leave an empty run directory behind.
            let path = dir.path().to_path_buf();
            drop(dir);
            let _ = std::fs::remove_dir_all(path);
            Err(Failure::Usage(e.into()))
        }
        Err(err @ RunError::Aborted { .. }) => {
            let message = err.to_string();
            let RunError::Aborted { partial, .. } = err else {
                unreachable!()
            };
            dir.write_history(space.len(), &partial.history)?;
            dir.write_json(run_dir::PARTIAL, &partial)?;
            manifest.finished = run_dir::timestamp(Utc::now());
            manifest.outcome = Outcome::Aborted;
            manifest.error = Some(message.clone());
            let path = dir.finish(&manifest)?;
            Err(Failure::Runtime(anyhow!(
                "{message} (partial results in {})",
                path.display()
            )))
        }
    }
}
