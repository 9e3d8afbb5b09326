//! `sis-lab`: config-driven runs of the LCM scheme and the direct Milstein
//! baseline for the stochastic SIS model.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;
use error::CliError;

/// Environment variable that overrides `outputs.dir`; `--out` still wins.
pub const OUT_DIR_ENV: &str = "SISLAB_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "sis-lab",
    version,
    about = "Positivity-preserving simulation of the stochastic SIS model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one path per scheme and step size and write the trajectories.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Index of the Brownian path under the base seed.
        #[arg(long, default_value_t = 0)]
        path_index: u64,
        /// Also write the fine Brownian increments as a binary dump.
        #[arg(long)]
        dump_increments: bool,
    },
    /// Estimate the strong error against a fine LCM reference and fit the rate.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Fit an exact synthetic line on two levels instead of simulating.
        #[arg(long)]
        self_test: bool,
    },
    /// Classify long-run behaviour (extinction or persistence) over many seeds.
    Dynamics {
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate how often the LCM truncation fires.
    Truncation {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    #[arg(long, value_name = "P")]
    paths: Option<usize>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut config = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            config.run.base_seed = seed;
        }
        if let Some(paths) = self.paths {
            if paths == 0 {
                return Err(CliError::Config("--paths must be at least 1".into()));
            }
            config.run.n_paths = paths;
        }
        if let Some(out) = &self.out {
            config.outputs.dir = out.clone();
        } else if let Some(dir) = std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty()) {
            config.outputs.dir = dir.into();
        }
        if let Some(threads) = self.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
        }
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            common,
            path_index,
            dump_increments,
        } => commands::simulate(&common.resolve()?, path_index, dump_increments),
        Command::Convergence { common, self_test } => {
            commands::convergence(&common.resolve()?, self_test)
        }
        Command::Dynamics { common } => commands::dynamics(&common.resolve()?),
        Command::Truncation { common } => commands::truncation(&common.resolve()?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sis-lab: {e}");
            e.exit_code()
        }
    }
}
