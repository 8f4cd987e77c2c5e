//! Workbench CLI: `score`, `search`, `lemma`, and `parity` subcommands
//! over reasoning-trajectory machinery, with reproducible seeded outputs.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use commands::{lemma, parity, score, search, BadArgs, EXIT_ARGS, EXIT_IO};
use config::WorkbenchConfig;
use var_core::lemma::DomainError;
use var_core::parity::InstanceError;

#[derive(Debug, Parser)]
#[command(name = "var-workbench", version, about)]
struct Cli {
    /// JSON config file (default: $VAR_WORKBENCH_CONFIG, else built-ins).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed override; all randomness derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score trajectory files against ground-truth annotations.
    Score(score::ScoreArgs),
    /// Run one search and dump the outcome plus its event log.
    Search(search::SearchArgs),
    /// Monte-Carlo validation grid for the search guarantees.
    Lemma(lemma::LemmaArgs),
    /// Verify the layered-graph parity characterization.
    Parity(parity::ParityArgs),
}

fn run(cli: &Cli) -> anyhow::Result<i32> {
    let mut config = WorkbenchConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    let out_dir = cli.out.clone().unwrap_or_else(|| config.output_dir.clone());
    match &cli.command {
        Command::Score(args) => score::run(args, &config, &out_dir),
        Command::Search(args) => search::run(args, &config, &out_dir),
        Command::Lemma(args) => lemma::run(args, &config, &out_dir),
        Command::Parity(args) => parity::run(args, &config, &out_dir),
    }
}

fn error_exit_code(err: &anyhow::Error) -> i32 {
    if err.is::<BadArgs>() || err.is::<DomainError>() || err.is::<InstanceError>() {
        EXIT_ARGS
    } else {
        EXIT_IO
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_ARGS,
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(error_exit_code(&err) as u8)
        }
    }
}
