mod budget;
mod error;
mod fus;
mod link;
mod output;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use error::CliError;
use translum::Config;

#[derive(Parser)]
#[command(name = "translum", version, about = "Optical telemetry link and focused-ultrasound power-transfer simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optical link simulation
    #[command(subcommand)]
    Link(LinkCommand),
    /// Sample-throughput and link-rate feasibility
    Budget(budget::BudgetArgs),
    /// Focused-ultrasound power delivery
    #[command(subcommand)]
    Fus(FusCommand),
    /// Same as `link table1`
    #[command(hide = true)]
    Table1(link::Table1Args),
}

#[derive(Subcommand)]
enum LinkCommand {
    /// Run a BER experiment for one configuration
    Run(link::RunArgs),
    /// Sweep the twelve bench rows (rate, tissue, modulation)
    Table1(link::Table1Args),
}

#[derive(Subcommand)]
enum FusCommand {
    /// Delivered power over a frequency x load grid
    Sweep(fus::SweepArgs),
    /// Per-element and total power of an element array
    Array(fus::ArrayArgs),
}

/// Options shared by every command that reads a configuration.
#[derive(Args, Clone, Debug)]
pub struct Common {
    /// JSON configuration; the built-in defaults are used when omitted
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Print a single JSON document on stdout instead of a summary
    #[arg(long)]
    pub json: bool,
}

impl Common {
    pub fn load_config(&self) -> Result<Config, CliError> {
        Ok(match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::embedded_default(),
        })
    }
}

/// Seed precedence: command-line flag, then `TRANSLUM_SEED`, then config.
pub fn resolve_seed(flag: Option<u64>, config_seed: u64) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("TRANSLUM_SEED") {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("TRANSLUM_SEED must be an unsigned integer, got {text:?}"))),
        Err(_) => Ok(config_seed),
    }
}

/// Runs `f` on a dedicated pool of `threads` workers (all cores when `None`).
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be >= 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Link(LinkCommand::Run(args)) => link::run(args),
        Command::Link(LinkCommand::Table1(args)) | Command::Table1(args) => link::table1(args),
        Command::Budget(args) => budget::run(args),
        Command::Fus(FusCommand::Sweep(args)) => fus::sweep(args),
        Command::Fus(FusCommand::Array(args)) => fus::array(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
