mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use commands::{Overrides, Run, Summary};
use config::Config;
use error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    Exact,
    Sweep,
    Poisson,
    Mc,
    Figures,
}

/// Tail risk of insured claims on a random insurance network.
#[derive(Debug, Parser)]
#[command(name = "netrisk", version)]
struct Args {
    /// Subcommand to run.
    #[arg(value_enum)]
    command: Option<Command>,
    /// Same as the positional subcommand.
    #[arg(long = "subcommand", value_enum)]
    subcommand: Option<Command>,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<u64>,
    /// Truncation tolerance for Poisson series.
    #[arg(long)]
    tol: Option<f64>,
}

fn init_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("RISK_ENGINE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::invalid("invalid_argument", format!("RISK_ENGINE_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::failure("threads", e.to_string()))
}

fn run(args: Args) -> CliResult<Summary> {
    let command = match (args.command, args.subcommand) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::invalid("usage", "positional and --subcommand disagree"));
        }
        (Some(c), _) | (None, Some(c)) => c,
        (None, None) => return Err(CliError::invalid("usage", "missing subcommand (exact, sweep, poisson, mc, figures)")),
    };
    init_threads()?;
    let config = match &args.config {
        Some(path) => Config::load(path)?,
        None if command == Command::Figures => Config::default(),
        None => return Err(CliError::invalid("usage", "--config is required for this subcommand")),
    };
    let run = Run {
        config,
        overrides: Overrides {
            seed: args.seed,
            replicates: args.replicates,
            tol: args.tol,
        },
        out: args.out,
    };
    match command {
        Command::Exact => commands::exact(&run),
        Command::Sweep => commands::sweep(&run),
        Command::Poisson => commands::poisson(&run),
        Command::Mc => commands::mc(&run),
        Command::Figures => commands::figures(&run),
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("{}", CliError::invalid("usage", e.to_string().trim()).to_json());
            return ExitCode::from(error::EXIT_INVALID as u8);
        }
    };
    match run(args) {
        Ok(summary) => {
            println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
            ExitCode::from(summary.exit_code as u8)
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code as u8)
        }
    }
}
