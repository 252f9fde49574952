//! Command-line harness: seeded Monte-Carlo sweeps over SNR and surface
//! standoff distance, emitting CSV tables.

use clap::{Args, Parser, Subcommand};
use fdirs_core::config::{load_config, ScenarioConfig, Scheme};
use fdirs_core::experiment::{emit_results, run_distance_sweep, run_snr_sweep};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fdirs", version, about = "Full-duplex IRS link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario config file (`key = value` lines); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Override the number of Monte-Carlo trials per sweep point.
    #[arg(long)]
    trials: Option<usize>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the scheme list (comma separated names).
    #[arg(long)]
    schemes: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the operating SNR grid for the configured schemes.
    SnrSweep(CommonArgs),
    /// Sweep the surface standoff distance at the configured SNR.
    DistanceSweep(CommonArgs),
}

fn load_scenario(args: &CommonArgs) -> Result<ScenarioConfig<f64>, fdirs_core::Error> {
    let mut config = match &args.config {
        Some(path) => load_config::<f64>(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(trials) = args.trials {
        config.n_trials = trials;
    }
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(list) = &args.schemes {
        config.schemes = list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<Scheme>()
                    .map_err(fdirs_core::Error::InvalidConfig)
            })
            .collect::<Result<Vec<_>, _>>()?;
    }
    Ok(config)
}

fn run() -> Result<(), fdirs_core::Error> {
    let cli = Cli::parse();
    match &cli.command {
        Command::SnrSweep(args) => {
            let config = load_scenario(args)?;
            let table = run_snr_sweep(&config, &config.snr_grid_db, &config.schemes)?;
            emit_results(&table, &args.out)?;
            eprintln!("wrote {} rows to {}", table.rows.len(), args.out.display());
        }
        Command::DistanceSweep(args) => {
            let config = load_scenario(args)?;
            let table = run_distance_sweep(&config, &config.distance_grid_m)?;
            emit_results(&table, &args.out)?;
            eprintln!("wrote {} rows to {}", table.rows.len(), args.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
