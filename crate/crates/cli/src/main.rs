//! `contraction`: simulate recursive path processes, estimate distances,
//! run experiments and the acceptance suite.

mod distance;
mod experiment;
mod failure;
mod manifest;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};

use failure::{Failure, Outcome};

#[derive(Debug, Parser)]
#[command(name = "contraction", version, about)]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, env = "CONTRACTION_OUT_DIR", default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample an ensemble from a recursive equation described by a JSON config.
    Simulate { config: PathBuf },
    /// Distance between two ensemble files.
    Distance(distance::DistanceArgs),
    /// Run a named experiment (donsker, bm-char, spatial, rates).
    Experiment {
        name: String,
        /// JSON config; defaults apply to omitted fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed; overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run acceptance criteria and print one line per criterion.
    #[command(group(ArgGroup::new("which").required(true).args(["criterion", "all"])))]
    Report {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=11))]
        criterion: Option<u8>,
        #[arg(long)]
        all: bool,
    },
}

fn run(cli: Cli) -> Outcome<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::validation("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::runtime(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate { config } => {
            let path = simulate::run(&config, &cli.out)?;
            println!("{}", path.display());
        }
        Command::Distance(args) => {
            distance::run(&args, &cli.out)?;
        }
        Command::Experiment { name, config, seed } => {
            experiment::run(&name, config.as_deref(), seed, &cli.out)?;
        }
        Command::Report { criterion, .. } => {
            let ids = criterion.map(|c| vec![c]).unwrap_or_else(experiment::all_ids);
            experiment::report(&ids, &cli.out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
