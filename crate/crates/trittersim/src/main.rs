use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use trittersim::cli::{
    run_budget, run_demux, run_oracle_check, run_reconstruct, run_simulate, OutputFormat,
};
use trittersim::config::{self, OracleCheckConfig};
use trittersim::error::{Error, Result};

/// Batch simulator and analysis toolkit for demultiplexed multi-photon
/// interference in reconfigurable linear-optical circuits.
#[derive(Parser)]
#[command(name = "trittersim", version, about)]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for every stochastic step of the run.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Tabular artifact format: csv or json.
    #[arg(long, global = true, default_value = "csv")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Multi-photon output distribution of a circuit.
    Simulate,
    /// Demultiplexer conversion rates and active efficiency.
    Demux,
    /// Unitary reconstruction from intensity and fringe data.
    Reconstruct,
    /// End-to-end rate and loss budget tables.
    Budget,
    /// Randomized engine-vs-oracle agreement sweep.
    OracleCheck,
}

fn require_config(args: &Args) -> Result<&PathBuf> {
    args.config
        .as_ref()
        .ok_or_else(|| Error::Config("--config <path> is required for this command".into()))
}

fn run(args: &Args) -> Result<Vec<PathBuf>> {
    let format: OutputFormat = args.format.parse()?;
    match args.command {
        Command::Simulate => {
            let cfg = config::load_config(require_config(args)?)?;
            run_simulate(&cfg, args.seed, &args.out, format)
        }
        Command::Demux => {
            let cfg = config::load_config(require_config(args)?)?;
            run_demux(&cfg, args.seed, &args.out, format)
        }
        Command::Reconstruct => {
            let cfg = config::load_config(require_config(args)?)?;
            run_reconstruct(&cfg, args.seed, &args.out, format)
        }
        Command::Budget => {
            let cfg = config::load_config(require_config(args)?)?;
            run_budget(&cfg, args.seed, &args.out, format)
        }
        Command::OracleCheck => {
            let cfg = match &args.config {
                Some(path) => config::load_config(path)?,
                None => OracleCheckConfig {
                    cases: 100,
                    max_photons: 4,
                    max_modes: 4,
                    tolerance: 1e-10,
                },
            };
            run_oracle_check(&cfg, args.seed, &args.out, format)
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(files) => {
            for file in files {
                println!("{}", file.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
