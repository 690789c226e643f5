//! Command-line driver: argument parsing, exit-code policy, and the
//! machine-readable error record.
//!
//! Exit codes are a stable contract:
//!   0 — success
//!   2 — configuration error (bad flags, bad config file, invalid values)
//!   3 — Newton divergence (including a singular tangent or an aborted study)
//!   4 — I/O error (unwritable output, failed reads)
//!
//! Any failure prints exactly one stderr line of the form
//! `error: code=<N> kind=<config|divergence|io> message="..."`.

/// Prints progress to stdout, ignoring a closed pipe: the file artifacts
/// are the real output, so `convec ... | head` must not kill the run.
pub fn emit(args: std::fmt::Arguments) {
    use std::io::Write;
    let _ = std::io::stdout().write_fmt(args);
}

/// `println!` that survives a closed stdout.
macro_rules! say {
    ($($arg:tt)*) => { $crate::emit(format_args!("{}\n", format_args!($($arg)*))) };
}
/// `print!` that survives a closed stdout.
macro_rules! say_raw {
    ($($arg:tt)*) => { $crate::emit(format_args!($($arg)*)) };
}

mod config;
mod run;

use clap::Parser;
use config::{Cli, Command};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Divergence,
    Io,
}

/// A classified failure carrying its exit code and a one-line message.
#[derive(Debug)]
pub struct CliError {
    kind: ErrorKind,
    message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Config,
            message: message.into(),
        }
    }

    pub fn divergence(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Divergence,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Io,
            message: message.into(),
        }
    }

    /// Maps library errors onto the exit-code contract: I/O stays I/O, a
    /// singular tangent or aborted study is a divergence, anything else is
    /// a configuration problem.
    pub fn from_core(e: convec::Error) -> Self {
        match &e {
            convec::Error::Io(_) => CliError::io(e.to_string()),
            convec::Error::SingularTangent { .. } | convec::Error::StudyAborted { .. } => {
                CliError::divergence(e.to_string())
            }
            _ => CliError::config(e.to_string()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Config => 2,
            ErrorKind::Divergence => 3,
            ErrorKind::Io => 4,
        }
    }

    pub fn kind_str(&self) -> &'static str {
        match self.kind {
            ErrorKind::Config => "config",
            ErrorKind::Divergence => "divergence",
            ErrorKind::Io => "io",
        }
    }

    pub fn message(&self) -> &str {
        &self.message
    }
}

fn main() {
    // clap itself exits with code 2 on usage errors, matching the contract.
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => run::solve(args),
        Command::Convergence(args) => run::convergence(args),
        Command::SweepRa(args) => run::sweep_ra(args),
        Command::Diagnostics(args) => run::diagnostics(args),
    };
    if let Err(e) = result {
        eprintln!(
            "error: code={} kind={} message={:?}",
            e.exit_code(),
            e.kind_str(),
            e.message()
        );
        std::process::exit(e.exit_code());
    }
}
