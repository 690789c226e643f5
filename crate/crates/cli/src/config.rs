//! Command-line arguments, the key-value config file, and their merge.
//!
//! Every tunable is an `Option` on the clap side; resolution order is
//! command-line flag, then config-file entry, then built-in default, so a
//! flag always overrides the file.

use crate::CliError;
use clap::{Args, Parser, Subcommand};
use convec::io::OutputFormat;
use convec::newton::{NewtonConfig, StoppingNorm};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(
    name = "convec",
    version,
    about = "Finite element solver for a coupled stream-function/temperature convection system",
    long_about = "Solves  -lap(psi) - Ra*d(theta)/dx = f1,  J(psi,theta) = lap(theta) + f2  on the \
                  unit square with homogeneous Dirichlet conditions, using P1 elements and a \
                  Newton iteration. Sources are the built-in manufactured pair, optionally scaled."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve once and write the fields, the Newton log, and diagnostics
    Solve(SolveArgs),
    /// Run the manufactured-solution convergence study and write rates.csv
    Convergence(ConvergenceArgs),
    /// Solve for a list of Rayleigh numbers, warm-starting each from the last
    SweepRa(SweepRaArgs),
    /// Solve once and report the well-posedness diagnostics
    Diagnostics(DiagnosticsArgs),
}

/// Options shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Key-value config file (one `key = value` per line, `#` comments);
    /// command-line flags override file entries
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Newton stopping tolerance on the correction norm [default: 1e-8]
    #[arg(long, value_name = "EPS")]
    pub epsilon: Option<f64>,

    /// Maximum Newton iterations [default: 25]
    #[arg(long, value_name = "K")]
    pub max_iterations: Option<usize>,

    /// Norm for the stopping test: l2 or max [default: l2]
    #[arg(long, value_name = "NORM")]
    pub norm: Option<String>,

    /// Output directory [default: .]
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Mesh subdivisions per side (must be >= 2) [default: 32]
    #[arg(long, value_name = "N")]
    pub n: Option<usize>,

    /// Rayleigh number [default: 10]
    #[arg(long, value_name = "RA")]
    pub ra: Option<f64>,

    /// Source scaling factor applied to both f1 and f2 [default: 1]
    #[arg(long, value_name = "S")]
    pub scale: Option<f64>,

    /// Field file format: vtk or csv [default: vtk]
    #[arg(long, value_name = "FMT")]
    pub format: Option<String>,

    /// Embedding constant A used by the diagnostics [default: 1]
    #[arg(long, value_name = "A")]
    pub sobolev_a: Option<f64>,

    /// Data bound L for the diagnostics; measured from the solution if absent
    #[arg(long, value_name = "L")]
    pub data_bound_l: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Comma-separated mesh levels, each double the last [default: 8,16,32,64]
    #[arg(long, value_name = "N1,N2,...")]
    pub levels: Option<String>,

    /// Rayleigh number [default: 10]
    #[arg(long, value_name = "RA")]
    pub ra: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SweepRaArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Mesh subdivisions per side (must be >= 2) [default: 32]
    #[arg(long, value_name = "N")]
    pub n: Option<usize>,

    /// Comma-separated Rayleigh numbers [default: 0,10,50,100]
    #[arg(long, value_name = "RA1,RA2,...")]
    pub ra: Option<String>,

    /// Source scaling factor [default: 1]
    #[arg(long, value_name = "S")]
    pub scale: Option<f64>,

    /// Field file format: vtk or csv [default: vtk]
    #[arg(long, value_name = "FMT")]
    pub format: Option<String>,
}

#[derive(Args, Debug)]
pub struct DiagnosticsArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Mesh subdivisions per side (must be >= 2) [default: 32]
    #[arg(long, value_name = "N")]
    pub n: Option<usize>,

    /// Rayleigh number [default: 1]
    #[arg(long, value_name = "RA")]
    pub ra: Option<f64>,

    /// Source scaling factor [default: 1]
    #[arg(long, value_name = "S")]
    pub scale: Option<f64>,

    /// Embedding constant A [default: 1]
    #[arg(long, value_name = "A")]
    pub sobolev_a: Option<f64>,

    /// Data bound L; measured from the solution if absent
    #[arg(long, value_name = "L")]
    pub data_bound_l: Option<f64>,

    /// Also run a stability sweep over these source scales and write
    /// stability.csv (comma-separated list)
    #[arg(long, value_name = "S1,S2,...")]
    pub stability_scales: Option<String>,
}

/// Parsed `key = value` config file.
#[derive(Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::config(format!(
                    "{}:{}: expected `key = value`, got {line:?}",
                    path.display(),
                    i + 1
                )));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|e| {
                CliError::config(format!("config key {key} = {raw:?}: {e}"))
            }),
        }
    }

    fn get_string(&self, key: &str) -> Option<String> {
        self.values.get(key).cloned()
    }
}

/// Fully resolved options common to all subcommands.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub newton: NewtonConfig,
    pub out_dir: PathBuf,
}

fn parse_norm(s: &str) -> Result<StoppingNorm, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "l2" => Ok(StoppingNorm::L2),
        "max" => Ok(StoppingNorm::Max),
        other => Err(CliError::config(format!(
            "unknown stopping norm {other:?} (expected l2 or max)"
        ))),
    }
}

fn parse_format(s: &str) -> Result<OutputFormat, CliError> {
    s.parse::<OutputFormat>()
        .map_err(|e| CliError::config(e.to_string()))
}

/// Comma-separated list of `T`.
pub fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|tok| {
            tok.trim().parse::<T>().map_err(|e| {
                CliError::config(format!("cannot parse {what} entry {tok:?}: {e}"))
            })
        })
        .collect()
}

impl CommonArgs {
    pub fn resolve(&self, file: &ConfigFile) -> Result<Resolved, CliError> {
        let epsilon = match self.epsilon {
            Some(v) => v,
            None => file.get("epsilon")?.unwrap_or(1e-8),
        };
        let max_iterations = match self.max_iterations {
            Some(v) => v,
            None => file.get("max_iterations")?.unwrap_or(25),
        };
        let norm = match &self.norm {
            Some(s) => parse_norm(s)?,
            None => match file.get_string("norm") {
                Some(s) => parse_norm(&s)?,
                None => StoppingNorm::L2,
            },
        };
        let newton = NewtonConfig {
            epsilon,
            max_iterations,
            norm,
        };
        newton
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        let out_dir = match &self.out_dir {
            Some(p) => p.clone(),
            None => file
                .get_string("out_dir")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(".")),
        };
        Ok(Resolved { newton, out_dir })
    }
}

/// Resolves an optional flag against a config key and a default.
pub fn resolve_value<T: std::str::FromStr + Copy>(
    flag: Option<T>,
    file: &ConfigFile,
    key: &str,
    default: T,
) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(v),
        None => Ok(file.get(key)?.unwrap_or(default)),
    }
}

/// Same, but the value stays optional (no default).
pub fn resolve_optional<T: std::str::FromStr + Copy>(
    flag: Option<T>,
    file: &ConfigFile,
    key: &str,
) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.get(key),
    }
}

/// String-typed flag (format, lists) against a config key and default.
pub fn resolve_string(flag: &Option<String>, file: &ConfigFile, key: &str, default: &str) -> String {
    flag.clone()
        .or_else(|| file.get_string(key))
        .unwrap_or_else(|| default.to_string())
}

pub fn resolve_format(flag: &Option<String>, file: &ConfigFile) -> Result<OutputFormat, CliError> {
    parse_format(&resolve_string(flag, file, "format", "vtk"))
}

/// Raw string value of a config key, if present.
pub fn config_string(file: &ConfigFile, key: &str) -> Option<String> {
    file.get_string(key)
}

/// `n >= 2` so the mesh has interior nodes to solve for.
pub fn validate_n(n: usize) -> Result<usize, CliError> {
    if n < 2 {
        return Err(CliError::config(format!(
            "n must be at least 2 (got {n}): an n = 1 mesh has no interior nodes"
        )));
    }
    Ok(n)
}
