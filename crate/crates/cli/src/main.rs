use std::path::PathBuf;
use std::process::ExitCode;

use chirpmatch_cli::{parse_config, run, sweep, CliError, SweepAxis};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chirpmatch", version, about = "Chirped pulse-pair propagation through a lambda-atom medium")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate one configuration and write all diagnostics.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Keep final-state summaries only.
        #[arg(long)]
        lean: bool,
    },
    /// Repeat a lean run for each value of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// theta1, theta2, beta, alpha or Gamma
        #[arg(long)]
        axis: SweepAxis,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
    },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, out, lean } => {
            let mut cfg = parse_config(&config)?;
            if lean {
                cfg.output.storage = chirpmatch_core::StorageMode::Lean;
            }
            let manifest = run(&cfg, &out)?;
            println!("wrote {} files to {}", manifest.files.len(), out.display());
        }
        Command::Sweep {
            config,
            axis,
            values,
            out,
            workers,
        } => {
            let cfg = parse_config(&config)?;
            let manifest = sweep(&cfg, axis, &values, &out, workers)?;
            println!("wrote {} files to {}", manifest.files.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ CliError::Invariant(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
