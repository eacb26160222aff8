//! The `obsent` command-line interface.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 unreadable input
//! or bad flags, 3 an input violates an invariant, 4 dimension or label
//! mismatch.

mod commands;
pub mod document;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::error::Error;
use crate::theorems::Suite;

pub use commands::{cmd_entropy, cmd_random, cmd_recover, cmd_verify};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{file}: {path}: {message}")]
    Parse { file: String, path: String, message: String },

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("{file}: {path}: {source}")]
    Invalid { file: String, path: String, source: Error },

    #[error(transparent)]
    Domain(#[from] Error),

    #[error("{failures} verification instance(s) failed")]
    VerifyFailed { failures: usize },
}

fn domain_code(e: &Error) -> i32 {
    match e {
        Error::DimensionMismatch { .. } | Error::LabelMismatch { .. } => EXIT_MISMATCH,
        Error::InvalidConfig { .. } => EXIT_USAGE,
        _ => EXIT_INVARIANT,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Io { .. } | CliError::Usage(_) => EXIT_USAGE,
            CliError::Invalid { source, .. } => domain_code(source),
            CliError::Domain(e) => domain_code(e),
            CliError::VerifyFailed { .. } => EXIT_VERIFY_FAILED,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "obsent", version, about = "Observational entropy, recovery and verification")]
pub struct Cli {
    /// Seed for random sampling.
    #[arg(long, global = true, env = "OBSENT_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Write the output document here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Report entropies in bits rather than nats.
    #[arg(long, global = true)]
    pub bits: bool,

    /// Log progress and keep full joint vectors in reports.
    #[arg(long, short, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Observational and von Neumann entropy of a state under a measurement.
    Entropy {
        #[arg(long)]
        state: PathBuf,
        /// A povm, instrument or sequence document.
        #[arg(long)]
        measurement: PathBuf,
    },
    /// The recovered state from a state or from outcome statistics.
    Recover {
        #[arg(long)]
        measurement: PathBuf,
        #[arg(long, required_unless_present = "stats", conflicts_with = "stats")]
        state: Option<PathBuf>,
        /// A distribution document (probabilities or counts).
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Run verification suites on random instances or on given inputs.
    Verify(VerifyArgs),
    /// Sample a random object.
    Random(RandomArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteChoice {
    All,
    One(Suite),
}

fn parse_suite(s: &str) -> Result<SuiteChoice, String> {
    if s == "all" {
        return Ok(SuiteChoice::All);
    }
    s.parse().map(SuiteChoice::One).map_err(|_| {
        let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
        format!("expected all or one of {}", names.join(", "))
    })
}

/// `a..b` or `a..=b` (both inclusive), or a single dimension.
pub fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let bad = || format!("expected a dimension range like 2..6, got {s:?}");
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (a, b.strip_prefix('=').unwrap_or(b)),
        None => (s, s),
    };
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    if lo == 0 || lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// thm2, seq, sandwich, refine, concavity, chain, jeffrey or all.
    #[arg(long, default_value = "all", value_parser = parse_suite)]
    pub suite: SuiteChoice,
    /// Random instances per suite.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value = "2..6", value_parser = parse_dims)]
    pub dims: (usize, usize),
    /// Replay a single instance of a batch.
    #[arg(long)]
    pub index: Option<usize>,
    /// Verify given inputs instead of random ones (repeat for concavity).
    #[arg(long)]
    pub state: Vec<PathBuf>,
    #[arg(long)]
    pub measurement: Vec<PathBuf>,
    /// The added instrument for seq and sandwich.
    #[arg(long)]
    pub next: Option<PathBuf>,
    /// The post-processing matrix for refine.
    #[arg(long)]
    pub stochastic: Option<PathBuf>,
    /// Mixing weights for concavity, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RandomKind {
    State,
    Povm,
    Instrument,
    Sequence,
    Stochastic,
}

#[derive(Debug, Args)]
pub struct RandomArgs {
    #[arg(value_enum)]
    pub kind: RandomKind,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 2)]
    pub outcomes: usize,
    /// State rank (default full).
    #[arg(long)]
    pub rank: Option<usize>,
    /// Kraus operators per instrument branch.
    #[arg(long, default_value_t = 1)]
    pub kraus: usize,
    /// Sample a pure state.
    #[arg(long)]
    pub pure: bool,
    /// Sample a projective POVM.
    #[arg(long, conflicts_with = "commuting")]
    pub projective: bool,
    /// Sample a POVM with commuting elements.
    #[arg(long)]
    pub commuting: bool,
    /// Instruments in a sampled sequence.
    #[arg(long, default_value_t = 2)]
    pub steps: usize,
    /// Rows and columns of a stochastic matrix (default outcomes × dim).
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    /// Stream index within the seed.
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
}

/// Writes a JSON document to `out`, or stdout.
pub(crate) fn emit(value: &serde_json::Value, out: Option<&PathBuf>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON value serializes");
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io {
                    path: "stdout".into(),
                    message: e.to_string(),
                })
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Entropy { state, measurement } => cmd_entropy(state, measurement, cli),
        Command::Recover {
            measurement,
            state,
            stats,
        } => cmd_recover(state.as_deref(), stats.as_deref(), measurement, cli),
        Command::Verify(args) => cmd_verify(args, cli),
        Command::Random(args) => cmd_random(args, cli),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_parsing() {
        assert_eq!(parse_dims("2..6"), Ok((2, 6)));
        assert_eq!(parse_dims("2..=6"), Ok((2, 6)));
        assert_eq!(parse_dims("3"), Ok((3, 3)));
        assert!(parse_dims("6..2").is_err());
        assert!(parse_dims("0..2").is_err());
        assert!(parse_dims("a..b").is_err());
    }

    #[test]
    fn suite_parsing() {
        assert_eq!(parse_suite("all"), Ok(SuiteChoice::All));
        assert_eq!(parse_suite("refine"), Ok(SuiteChoice::One(Suite::Refine)));
        assert!(parse_suite("thm7").is_err());
    }

    #[test]
    fn exit_code_mapping() {
        let invalid = |source| CliError::Invalid {
            file: "f".into(),
            path: "p".into(),
            source,
        };
        assert_eq!(invalid(Error::NotPovm { deviation: 1.0 }).exit_code(), 3);
        assert_eq!(invalid(Error::DimensionMismatch { expected: 2, found: 3 }).exit_code(), 4);
        assert_eq!(CliError::Domain(Error::LabelMismatch { reason: String::new() }).exit_code(), 4);
        assert_eq!(CliError::Usage(String::new()).exit_code(), 2);
        assert_eq!(CliError::VerifyFailed { failures: 1 }.exit_code(), 1);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
