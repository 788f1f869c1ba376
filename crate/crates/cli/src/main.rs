mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Slow divergence integrals, slow relations and entry-exit transport for
/// planar slow-fast Liénard systems.
#[derive(Debug, Parser)]
#[command(name = "canard-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Configuration file (`block.key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the structural assumptions on f and p.
    Validate(Common),
    /// Tabulate the slow divergence integrals into sdi.csv.
    Sdi(Common),
    /// Tabulate S0 and its limit map over the entry interval into relation.csv.
    Relation(Common),
    /// Report fixed points, invariant measures and cyclicity bounds.
    Ergodic(Common),
    /// Write the entry density and the limit exit measure.
    Density(Common),
    /// Shoot for the control parameter and transport an entry ensemble.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the ensemble at several eps and compare against the limit measure.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Singular parameter values (repeat the flag, at least two).
        #[arg(long = "eps", required = true, num_args = 1)]
        eps: Vec<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = commands::init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    let result = match cli.command {
        Command::Validate(c) => commands::validate(&c.config),
        Command::Sdi(c) => commands::sdi(&c.config, c.out),
        Command::Relation(c) => commands::relation(&c.config, c.out),
        Command::Ergodic(c) => commands::ergodic(&c.config, c.out),
        Command::Density(c) => commands::density(&c.config, c.out),
        Command::Simulate {
            common,
            eps,
            samples,
            seed,
        } => commands::simulate(&common.config, common.out, eps, samples, seed),
        Command::Compare {
            common,
            eps,
            samples,
            seed,
        } => commands::compare(&common.config, common.out, &eps, samples, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
