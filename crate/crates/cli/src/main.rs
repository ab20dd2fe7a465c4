mod commands;
mod config;
mod error;
mod expr;
mod output;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::CliResult;

/// Probability integrals of conserved currents over hypersurfaces of any
/// causal character.
#[derive(Parser)]
#[command(name = "lborn", version)]
struct Cli {
    /// Experiment configuration (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory receiving CSV/JSON outputs.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Overrides the configured random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured quadrature resolution (coarse cells per axis).
    #[arg(long, global = true)]
    resolution: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Crossing-time table and causal sweep of the rotating disk.
    Example1 {
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long)]
        r_max: Option<f64>,
        /// Number of radii in the crossing table.
        #[arg(long)]
        grid: Option<usize>,
        /// Crossing search window.
        #[arg(long)]
        tau_max: Option<f64>,
    },
    /// Runs every verification suite; exits 1 if any fails.
    Verify,
    /// Probability of the configured region.
    Born,
    /// P(τ) along the configured flow, written to conservation.csv.
    Sweep,
    /// Causal character of every grid node along the flow.
    Classify,
}

fn run(cli: Cli) -> CliResult<String> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(resolution) = cli.resolution {
        cfg.resolution = resolution;
    }
    if let Command::Example1 {
        omega,
        r_max,
        grid,
        tau_max,
    } = &cli.command
    {
        let e = &mut cfg.example1;
        e.omega = omega.unwrap_or(e.omega);
        e.r_max = r_max.unwrap_or(e.r_max);
        e.grid = grid.unwrap_or(e.grid);
        e.tau_max = tau_max.or(e.tau_max);
    }
    cfg.validate()?;
    let out = &cli.out_dir;
    match cli.command {
        Command::Example1 { .. } => commands::example1(&cfg, out),
        Command::Verify => commands::verify(&cfg, out),
        Command::Born => commands::born(&cfg, out),
        Command::Sweep => commands::sweep(&cfg, out),
        Command::Classify => commands::classify(&cfg, out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
