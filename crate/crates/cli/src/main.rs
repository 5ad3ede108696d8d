mod commands;
mod input;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::input::{ChannelArgs, ProtocolArgs};

/// Probabilistic chain teleportation of a qutrit over partially entangled channels.
#[derive(Debug, Parser)]
#[command(name = "qchain", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run Monte Carlo trials and compare against the exact success probability.
    Simulate(SimulateArgs),
    /// Print the exact outcome distribution of one protocol run.
    Enumerate(EnumerateArgs),
    /// Closed-form success probabilities along the min/max envelopes.
    Sweep(SweepArgs),
    /// Run every acceptance check and print a JSON summary.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    protocol: ProtocolArgs,
    #[command(flatten)]
    channel: ChannelArgs,
    /// Input state as `re0,im0,re1,im1,re2,im2`, or `random` for a Haar-random state drawn from the seed.
    #[arg(long, default_value = "random")]
    state: String,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[command(flatten)]
    protocol: ProtocolArgs,
    #[command(flatten)]
    channel: ChannelArgs,
    /// Input state as `re0,im0,re1,im1,re2,im2`, or `random`.
    #[arg(long, default_value = "random")]
    state: String,
    /// Seed for `--state random`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep all nine GBM outcomes per hop instead of merging over `n`.
    #[arg(long)]
    full_outcomes: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Number of GCTP segments N; SCTP runs over 3N hops.
    #[arg(long, default_value_t = 1)]
    segments: usize,
    #[arg(long, default_value_t = qutrit_chain::analysis::DEFAULT_GRID_POINTS)]
    points: usize,
    /// Smallest a0 on the grid.
    #[arg(long, default_value_t = qutrit_chain::analysis::RATIO_PLOT_A0_MIN)]
    a0_min: f64,
    /// Largest a0 on the grid; defaults to 1/sqrt(3).
    #[arg(long)]
    a0_max: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per Monte Carlo configuration.
    #[arg(long)]
    trials: Option<usize>,
    /// Flip the sign of one Kraus entry so the suite must fail.
    #[arg(long, hide = true)]
    inject_kraus_fault: bool,
    #[command(flatten)]
    out: OutputArgs,
}

/// Failure modes, mapped to exit codes 2 and 1.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl From<qutrit_chain::Error> for CliError {
    fn from(e: qutrit_chain::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Internal(format!("i/o error: {e}"))
    }
}

/// What a command produced and whether it counts as success.
pub struct Outcome {
    pub body: String,
    pub ok: bool,
}

fn emit(out: &OutputArgs, body: &str) -> io::Result<()> {
    match &out.output {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            w.write_all(body.as_bytes())?;
            w.flush()
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(body.as_bytes())?;
            lock.flush()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (result, out) = match &cli.command {
        Command::Simulate(a) => (commands::simulate(a), &a.out),
        Command::Enumerate(a) => (commands::enumerate(a), &a.out),
        Command::Sweep(a) => (commands::sweep(a), &a.out),
        Command::Verify(a) => (commands::verify(a), &a.out),
    };
    match result.and_then(|o| emit(out, &o.body).map(|_| o).map_err(CliError::from)) {
        Ok(o) if o.ok => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            match &e {
                CliError::Validation(msg) => eprintln!("error: {msg}"),
                CliError::Internal(msg) => eprintln!("internal error: {msg}"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}
