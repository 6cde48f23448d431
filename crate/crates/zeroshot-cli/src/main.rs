//! `zeroshot` — reproducible zero-shot audio classification experiments.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{cmd_bench, cmd_eval, cmd_synth, cmd_train, CliError};
use config::{load_config, Overrides};

#[derive(Debug, Args)]
struct CommonArgs {
    /// Experiment config file (flat `key = value` lines, dotted sections).
    #[arg(long)]
    config: PathBuf,
    /// Override the run seed (train.seed, bench.base_seed, synth.seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory (out.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the method (train.method; restricts bench.methods).
    #[arg(long)]
    method: Option<String>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            method: self.method.clone(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "zeroshot", version, about = "Zero-shot audio classification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one projection model; write a checkpoint and per-epoch metrics.
    Train {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run every configured method over a shared seed ladder; write
    /// per-seed results, summaries and t-tests.
    Bench {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Generate a synthetic task and write it as data files.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Classify the test split with an existing checkpoint.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        /// Checkpoint file (overrides eval.checkpoint).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Train { common } => {
            let config = load_config(&common.config, &common.overrides())?;
            cmd_train(&config)
        }
        Command::Bench { common } => {
            let config = load_config(&common.config, &common.overrides())?;
            cmd_bench(&config)
        }
        Command::Synth { common } => {
            let config = load_config(&common.config, &common.overrides())?;
            cmd_synth(&config)
        }
        Command::Eval { common, checkpoint } => {
            let config = load_config(&common.config, &common.overrides())?;
            cmd_eval(&config, checkpoint.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
