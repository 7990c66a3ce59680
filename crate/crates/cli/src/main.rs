use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod report;

use commands::Run;
use config::ScenarioConfig;
use report::{print_checks, Output};

/// Environment variable sizing the worker pool.
const WORKERS_ENV: &str = "BIYB_WORKERS";

#[derive(Parser)]
#[command(name = "biyb", version, about = "Verification suites for the bi-Yang-Baxter sigma-model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Operator identities, Jacobi, (R - i) and Iwasawa checks.
    VerifyAlgebra(Common),
    /// Evolve the field equations; snapshots, residual series and ladder slopes.
    Simulate(Common),
    /// Off-shell identity, limit and gauge chains, on-shell curvature sweep.
    VerifyLax(Common),
    /// Principal chiral to two-parameter dressing cascade.
    Cascade(Common),
    /// Drift of monodromy traces along a run.
    Monodromy(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario config (JSON); defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the seed of the initial data and of the random checks.
    #[arg(long)]
    seed: Option<u64>,
    /// Runs only ladder level `k` (0-based).
    #[arg(long)]
    level: Option<usize>,
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::VerifyAlgebra(c) => ("verify-algebra", c),
            Command::Simulate(c) => ("simulate", c),
            Command::VerifyLax(c) => ("verify-lax", c),
            Command::Cascade(c) => ("cascade", c),
            Command::Monodromy(c) => ("monodromy", c),
        }
    }
}

fn init_workers() -> Result<()> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .parse()
            .with_context(|| format!("{WORKERS_ENV}={v} is not a worker count"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<bool> {
    init_workers()?;
    let (name, common) = cli.command.parts();
    let mut cfg = match &common.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.initial.seed = s;
    }
    cfg.validate()?;
    let run = Run {
        cfg,
        level: common.level,
    };
    let hash = run.cfg.hash();
    let mut out = Output::new(&common.out, name, hash)?;
    out.json("config.json", &run.cfg)?;
    let start = Instant::now();
    let checks = match &cli.command {
        Command::VerifyAlgebra(_) => commands::verify_algebra(&run, &mut out),
        Command::Simulate(_) => commands::simulate(&run, &mut out),
        Command::VerifyLax(_) => commands::verify_lax(&run, &mut out),
        Command::Cascade(_) => commands::cascade(&run, &mut out),
        Command::Monodromy(_) => commands::monodromy(&run, &mut out),
    }
    .with_context(|| format!("{name} failed"))?;
    out.finish(start.elapsed().as_secs_f64())?;
    print_checks(&checks);
    Ok(checks.iter().all(|c| c.passed))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
