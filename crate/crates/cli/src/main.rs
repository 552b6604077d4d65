//! `harnacklab`: runs one experiment from a TOML config and writes its
//! artifacts and a run manifest to an output directory.
//!
//! Exit status is 0 on success, 2 for invalid input (unparsable config,
//! unknown keys, parameters out of range) and 3 for numeric failures or a
//! failed verification.

mod config;
mod experiments;
mod output;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;
use experiments::{Context, Verdict};
use output::{sha256_hex, Output, RunManifest};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numeric(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<harnacklab_core::Error> for CliError {
    fn from(e: harnacklab_core::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

#[derive(Parser)]
#[command(name = "harnacklab", version, about = "Experiments for degenerate fully nonlinear parabolic equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; overrides `threads` in the config.
    #[arg(long)]
    threads: Option<usize>,
    /// RNG seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a catalog solution on a grid.
    CatalogEval(RunArgs),
    /// Evolve initial data with the explicit solver.
    Solve(RunArgs),
    /// Sample the subsolution residual of a barrier.
    VerifyBarrier(RunArgs),
    /// Sample the residual of the blow-up example.
    VerifyExample(RunArgs),
    /// Check that evolution commutes with intrinsic rescaling.
    VerifyScaling(RunArgs),
    /// Slide test functions from below and measure the contact set.
    Contact(RunArgs),
    /// Select a Vitali subcover and verify it.
    Cover(RunArgs),
    /// Harnack-type measurements.
    #[command(subcommand)]
    Harnack(HarnackCommand),
    /// Grid-refinement study against an exact solution.
    Convergence(RunArgs),
}

#[derive(Subcommand)]
enum HarnackCommand {
    /// Weak and intrinsic Harnack ratios at one point.
    Measure(RunArgs),
    /// Propagation constants over a family.
    Propagation(RunArgs),
    /// Superlevel-set decay table.
    Decay(RunArgs),
    /// Search for barrier parameters.
    BarrierScan(RunArgs),
    /// Backward waiting times of the blow-up example.
    WaitingTime(RunArgs),
}

type Runner = fn(&Context, &mut Output) -> Result<Verdict, CliError>;

impl Command {
    fn resolve(self) -> (&'static str, RunArgs, Runner) {
        match self {
            Command::CatalogEval(a) => ("catalog-eval", a, experiments::catalog_eval),
            Command::Solve(a) => ("solve", a, experiments::solve),
            Command::VerifyBarrier(a) => ("verify-barrier", a, experiments::verify_barrier),
            Command::VerifyExample(a) => ("verify-example", a, experiments::verify_example),
            Command::VerifyScaling(a) => ("verify-scaling", a, experiments::verify_scaling),
            Command::Contact(a) => ("contact", a, experiments::contact),
            Command::Cover(a) => ("cover", a, experiments::cover),
            Command::Convergence(a) => ("convergence", a, experiments::convergence),
            Command::Harnack(h) => match h {
                HarnackCommand::Measure(a) => ("harnack-measure", a, experiments::harnack_measure),
                HarnackCommand::Propagation(a) => ("harnack-propagation", a, experiments::harnack_propagation),
                HarnackCommand::Decay(a) => ("harnack-decay", a, experiments::harnack_decay),
                HarnackCommand::BarrierScan(a) => ("harnack-barrier-scan", a, experiments::harnack_barrier_scan),
                HarnackCommand::WaitingTime(a) => ("harnack-waiting-time", a, experiments::harnack_waiting_time),
            },
        }
    }
}

fn run(name: &str, args: RunArgs, runner: Runner) -> Result<(), CliError> {
    let started = Instant::now();
    let text = std::fs::read(&args.config)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", args.config.display())))?;
    let config = ExperimentConfig::parse(
        std::str::from_utf8(&text).map_err(|_| CliError::Validation("config is not valid UTF-8".into()))?,
    )?;
    config.check_kind(name)?;

    if let Some(threads) = args.threads.or(config.threads) {
        if threads == 0 {
            return Err(CliError::Validation("threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Numeric(format!("cannot start the thread pool: {e}")))?;
    }

    let dir = args
        .out
        .clone()
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| Path::new("out").join(name));
    let mut out = Output::create(dir)?;
    let config_json = serde_json::to_value(&config).map_err(|e| CliError::Io(e.to_string()))?;
    let ctx = Context {
        seed: args.seed.unwrap_or(config.seed),
        seed_from_cli: args.seed.is_some(),
        config_dir: args.config.parent().map(Path::to_path_buf).unwrap_or_default(),
        config,
    };
    let verdict = runner(&ctx, &mut out)?;
    let manifest = RunManifest {
        command: name.to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        config_path: args.config.display().to_string(),
        config_sha256: sha256_hex(&text),
        seed: ctx.seed,
        threads: rayon::current_num_threads(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        stages: Vec::new(),
        outputs: Vec::new(),
        config: config_json,
    };
    let dir = out.dir().to_owned();
    out.finish(manifest)?;
    match verdict {
        Verdict::Passed => {
            println!("{name}: ok, outputs in {}", dir.display());
            Ok(())
        }
        Verdict::Failed(why) => Err(CliError::Numeric(format!("verification failed: {why}"))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args, runner) = cli.command.resolve();
    match run(name, args, runner) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("harnacklab {name}: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
