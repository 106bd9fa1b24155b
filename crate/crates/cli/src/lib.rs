//! Experiment runner behind the `srblab` binary.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 numeric failure.

pub mod commands;
pub mod config;
pub mod manifest;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Core(#[from] srblab::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use srblab::Error as E;
        match self {
            CliError::Verification(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Core(e) => match e {
                E::InvalidArgument(_)
                | E::DegenerateInput(_)
                | E::ResourceLimit(_)
                | E::Parse(_)
                | E::Checksum { .. }
                | E::Io(_) => 2,
                E::NumericFailure { .. }
                | E::Divergence(_)
                | E::Supercritical { .. }
                | E::SeriesDivergence { .. }
                | E::InconsistentBracket { .. } => 3,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "srblab", version, about = "Experiments on self-repellent Brownian bridges and cycle statistics")]
pub struct Cli {
    /// TOML configuration file with flat `[section]` tables.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; all randomness derives from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Primary output file; stdout when absent (where allowed).
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Override a configuration value: `--set section.key=value`.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    pub set: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Tabulate bridge weights Γ_k(0); extends an existing table in place.
    EstimateGamma,
    /// Connective-constant bracket, critical-density partial sums, scaling fit.
    EstimateRhoc,
    /// Tilt, free energy and mass across a density grid.
    PhaseDiagram,
    /// Sample cycle-count vectors and compare with the variational minimizer.
    SampleCycles,
    /// Run the exhaustive and statistical verification suites.
    Verify,
    /// Neumann-series deconvolution of a Green-function sum on a grid.
    Deconvolve,
    /// Green function against its leading large-distance term.
    GreenAsymptotics,
    /// Decay of the two-bridge interaction integral with separation.
    UnDecay,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::EstimateGamma => "estimate-gamma",
            Command::EstimateRhoc => "estimate-rhoc",
            Command::PhaseDiagram => "phase-diagram",
            Command::SampleCycles => "sample-cycles",
            Command::Verify => "verify",
            Command::Deconvolve => "deconvolve",
            Command::GreenAsymptotics => "green-asymptotics",
            Command::UnDecay => "un-decay",
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let text = match &cli.config {
        Some(p) => Some(
            std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?,
        ),
        None => None,
    };
    let mut overrides = cli.set.clone();
    if let Some(s) = cli.seed {
        overrides.push(format!("run.seed={s}"));
    }
    if let Some(w) = cli.workers {
        overrides.push(format!("run.workers={w}"));
    }
    if let Some(o) = &cli.output {
        overrides.push(format!("run.output={}", toml::Value::String(o.display().to_string())));
    }
    let cfg = config::load(text.as_deref(), &overrides)?;
    let workers = cfg.run.workers.unwrap_or_else(rayon::current_num_threads).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let start = Instant::now();
    let outcome = pool.install(|| commands::dispatch(cli.command, &cfg))?;
    if let Some(path) = &outcome.sidecar_for {
        manifest::write_sidecar(path, &outcome.manifest, start.elapsed(), workers)?;
    }
    match outcome.failure {
        Some(msg) => Err(CliError::Verification(msg)),
        None => Ok(()),
    }
}
