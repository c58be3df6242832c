//! `wndkit`: build, analyze and simulate weakly nonlinear-dissipative
//! approximations of entropic hyperbolic-parabolic systems.
//!
//! Exit status: 0 success, 1 negative analysis finding, 2 input error,
//! 3 blow-up during simulation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod export;
mod initial;
mod presets;
mod spec_io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Run;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "wndkit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults are used when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides `outputs.directory`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for the inner parallel loops.
    #[arg(long, global = true, env = "WNDKIT_THREADS", value_name = "N")]
    threads: Option<usize>,
    /// Seed for random initial data and random test fields.
    #[arg(long, global = true, value_name = "S")]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Check entropy symmetrization and diffusion nonnegativity.
    Validate,
    /// Build the averaged operators and dump them.
    Operators,
    /// Kawashima condition and strict dissipativity criterion.
    Dissipativity,
    /// Integrate the averaged system.
    Simulate,
    /// Sound speed, acoustic diffusivity and interaction coefficients of a gas.
    WcnsReport,
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Input("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Input(format!("cannot configure thread pool: {e}")))?;
    }
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default_run(),
    };
    let run = Run::new(config, cli.out, cli.seed)?;
    match cli.command {
        Command::Validate => commands::validate(&run),
        Command::Operators => commands::operators(&run),
        Command::Dissipativity => commands::dissipativity(&run),
        Command::Simulate => commands::simulate_cmd(&run),
        Command::WcnsReport => commands::wcns_report(&run),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wndkit: {e}");
            e.exit_code()
        }
    }
}
