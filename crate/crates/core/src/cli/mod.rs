//! The `palm-l2o` command line: dataset generation, schedule training,
//! NMSE-curve evaluation and oracle re-verification.

mod commands;
mod config;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::Error;

pub use commands::{cmd_eval, cmd_gen, cmd_oracle_check, cmd_train, ScheduleFile};
pub use config::{Baselines, ExperimentConfig, Overrides, Problem, TrainOverrides};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;
pub const EXIT_IO: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "palm-l2o", version, about = "Learned penalty schedules for proximal ALM")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate a dataset with oracle solutions.
    Gen,
    /// Learn a penalty schedule on a dataset.
    Train,
    /// Write NMSE-vs-iteration curves for the learned schedule and baselines.
    Eval,
    /// Re-verify the oracle certificates of a dataset.
    OracleCheck,
}

/// Exit code for an error: 2 configuration, 3 numerical, 4 input/output.
pub fn exit_code(err: &Error) -> u8 {
    match err.root() {
        Error::InvalidArgument(_) | Error::Validation(_) => EXIT_CONFIG,
        Error::Io { .. } | Error::Parse { .. } | Error::Checksum { .. } | Error::Version { .. } => {
            EXIT_IO
        }
        _ => EXIT_NUMERIC,
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var("PALM_L2O_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::Validation(format!("PALM_L2O_THREADS={value:?} is not a positive integer")))?;
    // a pool may already exist when called twice in one process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

/// Runs one command and returns its JSON summary.
pub fn dispatch(cli: &Cli) -> Result<serde_json::Value, Error> {
    configure_threads()?;
    let file = match &cli.overrides.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    let cfg = file.merged(&cli.overrides);
    match cli.command {
        Command::Gen => cmd_gen(&cfg),
        Command::Train => cmd_train(&cfg),
        Command::Eval => cmd_eval(&cfg),
        Command::OracleCheck => cmd_oracle_check(&cfg),
    }
}

/// Parses `args`, runs the command, prints its JSON summary on stdout and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(&cli) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(err) => {
            let code = exit_code(&err);
            let report = serde_json::json!({ "error": err.to_string(), "exit_code": code });
            eprintln!("{report}");
            ExitCode::from(code)
        }
    }
}
