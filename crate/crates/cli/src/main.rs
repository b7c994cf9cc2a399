//! `nkgame`: simulate, solve and bound threshold opinion games.
//!
//! Exit codes: 0 success, 1 failed verification, 2 truncation rate above
//! 10%, 3 state-space cap exceeded, 64 usage or parse error, 70 internal
//! failure, 74 I/O failure.

mod commands;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nkgame::{Error, GameConfig, Mode, Population};

use output::Format;

pub const EXIT_VERIFY_FAILED: u8 = 1;
pub const EXIT_TRUNCATED: u8 = 2;
pub const EXIT_STATE_CAP: u8 = 3;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_INTERNAL: u8 = 70;
pub const EXIT_IO: u8 = 74;

#[derive(Parser)]
#[command(
    name = "nkgame",
    version,
    about = "Threshold opinion games on the complete graph"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo estimate of the decision probability and time.
    Simulate(SimulateArgs),
    /// Exact absorption analysis of the lumped chain.
    Exact(ExactArgs),
    /// Closed-form bounds applicable to the population.
    Bounds(RunArgs),
    /// Cross-check exact, bound and Monte Carlo results over a grid.
    Verify(VerifyArgs),
}

#[derive(Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct RunArgs {
    /// Population, e.g. "2*rejector,1*consentor,3*majority".
    #[arg(long)]
    pub pop: String,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value = "async")]
    pub mode: Mode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Step cap per trial; defaults to 10^6 (async) or 10^4 (sync).
    #[arg(long)]
    pub max_steps: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Also write one CSV line per trial to this file.
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Include the exact chain solution in the summary.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value_t = nkgame::exact::DEFAULT_STATE_CAP)]
    pub max_states: usize,
    /// Write every lumped state with its transitions as JSON.
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// TOML grid of checks; a built-in grid is used when absent.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::StateSpaceTooLarge { .. } => EXIT_STATE_CAP,
            Error::SingularSystem(_) => EXIT_INTERNAL,
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError {
            code: EXIT_IO,
            message: e.to_string(),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError {
            code: EXIT_IO,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError {
            code: EXIT_INTERNAL,
            message: e.to_string(),
        }
    }
}

pub fn parse_population(text: &str) -> Result<Population, CliError> {
    text.parse().map_err(|e| match e {
        Error::Parse { column, message } => CliError::usage(format!(
            "invalid population at line 1, column {column}: {message}\n  {text}\n  {:>column$}",
            "^"
        )),
        other => CliError::from(other),
    })
}

impl RunArgs {
    pub fn config(&self) -> Result<GameConfig, CliError> {
        let population = parse_population(&self.pop)?;
        let max_steps = self.max_steps.unwrap_or(self.mode.default_max_steps());
        Ok(GameConfig::with_max_steps(
            population, self.k, self.mode, self.seed, max_steps,
        )?)
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Simulate(args) => commands::simulate(&args),
        Command::Exact(args) => commands::exact(&args),
        Command::Bounds(args) => commands::bounds(&args),
        Command::Verify(args) => verify::run(&args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
