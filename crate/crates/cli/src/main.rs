//! `sflab` — configuration-driven experiment runner.
//!
//! Exit codes: 0 success, 1 configuration/validation error, 2 runtime
//! failure in at least one case.

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use sflab_cli::config::{parse_config, RunConfig, SCENARIO_IDS};
use sflab_cli::{output, scenarios};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "sflab",
    about = "Slow-fast averaging laboratory scenario runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct RunArgs {
    /// Path to the scenario configuration (TOML).
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for ensembles and sweep cells (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario config and write its artifacts.
    Run(RunArgs),
    /// Execute a sweep-type scenario (alias of `run` that insists on a grid).
    Sweep(RunArgs),
    /// List known scenario ids.
    ListScenarios,
}

fn load_config(args: &RunArgs) -> Result<RunConfig, ExitCode> {
    let text = match fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return Err(ExitCode::from(1));
        }
    };
    let mut cfg = match parse_config(&text, &args.config.display().to_string()) {
        Ok(c) => c,
        Err(errors) => {
            eprint!("{errors}");
            return Err(ExitCode::from(1));
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn execute(cfg: &RunConfig) -> Result<usize> {
    let start = Instant::now();
    // Fail-fast contract: the output directory is only created after the
    // configuration fully validated (which happened at parse time).
    fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    let outcome = scenarios::run_scenario(cfg, &cfg.output_dir)?;
    let wall = start.elapsed().as_secs_f64();
    let mut results = outcome.results;
    if !outcome.failures.is_empty() {
        results["case_failures"] = serde_json::json!(outcome.failures);
    }
    let summary = output::summary_value(cfg, &results, wall)?;
    output::write_summary(&cfg.output_dir, &summary)?;
    println!(
        "{}: wrote {} (wall {:.2}s{})",
        cfg.scenario.name(),
        cfg.output_dir.join("summary.json").display(),
        wall,
        if outcome.failures.is_empty() {
            String::new()
        } else {
            format!(", {} case failure(s)", outcome.failures.len())
        }
    );
    Ok(outcome.failures.len())
}

fn run_command(args: &RunArgs, require_sweep: bool) -> ExitCode {
    let cfg = match load_config(args) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if require_sweep && !cfg.scenario.is_sweep() {
        eprintln!(
            "error: `sweep` needs a sweep-type scenario (epsilon_sweep, alpha_sweep, u_sweep); `{}` is not one — use `run`",
            cfg.scenario.name()
        );
        return ExitCode::from(1);
    }
    if let Some(jobs) = args.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("warning: could not size the worker pool: {e}");
        }
    }
    match execute(&cfg) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => run_command(&args, false),
        Command::Sweep(args) => run_command(&args, true),
        Command::ListScenarios => {
            for (name, _, describe) in SCENARIO_IDS {
                println!("{name:20} {describe}");
            }
            let registry = sflab::system::SystemRegistry::with_builtins();
            println!("\nbuilt-in systems: {}", registry.ids().join(", "));
            ExitCode::SUCCESS
        }
    }
}
