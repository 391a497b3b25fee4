//! Command-line front end.
//!
//! Exit codes: 0 success, 1 analysis error, 2 I/O error, 3 schema, numeric
//! or argument error, 4 enumeration guard exceeded.

use std::ffi::OsString;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use dichotomy_core::applications::{shift_analysis, stationarize};
use dichotomy_core::criteria::{decide, DecideOptions};
use dichotomy_core::montecarlo::summarize;
use dichotomy_core::oracle::joint_paths;
use dichotomy_core::{CanonicalChain, Error};
use serde::Serialize;

use crate::oracle_check::oracle_check;
use crate::report::{self, SimulationReport};
use crate::spec_file::{read_spec, SpecError};
use crate::parallel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "dichotomy", version, about = "Equivalence or singularity of non-stationary Markov measures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output format; defaults to text on a terminal and json otherwise.
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
}

#[derive(Debug, clap::Args)]
pub struct Pair {
    /// Spec file of measure A.
    #[arg(long)]
    pub spec: PathBuf,
    /// Spec file of measure B.
    #[arg(long)]
    pub other: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a spec file.
    Validate {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Decide equivalence or mutual singularity of A and B.
    Decide {
        #[command(flatten)]
        pair: Pair,
        /// Entry lower bound for the class S certificate.
        #[arg(long)]
        delta: Option<f64>,
        /// Window length for the class S certificate.
        #[arg(long)]
        bigm: Option<u64>,
        /// Horizon of the window estimates of the classes R and S.
        #[arg(long, default_value_t = 256)]
        horizon: u64,
    },
    /// Hellinger integrals H_n and partial sums of D_n^2.
    Hellinger {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, default_value_t = 100)]
        horizon: u64,
    },
    /// Sample log z_n trajectories under B.
    Simulate {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, default_value_t = 100)]
        horizon: u64,
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Reports the fraction of paths with log z_n below -threshold.
        #[arg(long, default_value_t = 10.0)]
        threshold: f64,
    },
    /// Non-singularity of the shift.
    Shift {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Equivalent stationary Markov measure.
    Stationarize {
        #[arg(long)]
        spec: PathBuf,
        /// Stationary initial law of the limit, comma separated.
        #[arg(long, value_delimiter = ',')]
        initial: Option<Vec<f64>>,
    },
    /// Compare exact computations with path enumeration.
    OracleCheck {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, default_value_t = 6)]
        horizon: u64,
        /// Also write the joint path table (path,p_A,p_B,z) to this file.
        #[arg(long)]
        dump_paths: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Spec(#[from] SpecError),
    #[error("{0}")]
    Analysis(Error),
    #[error("{0}")]
    Argument(String),
    #[error("writing output: {0}")]
    Output(#[from] std::io::Error),
    /// Carries the rendered report, which is still printed.
    #[error("oracle check failed")]
    OracleMismatch(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Analysis(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Spec(SpecError::Io { .. }) | CliError::Output(_) => 2,
            CliError::Spec(_) | CliError::Argument(_) => 3,
            CliError::Analysis(Error::GuardExceeded { .. }) => 4,
            CliError::Analysis(_) | CliError::OracleMismatch(_) => 1,
        }
    }
}

fn load(path: &Path) -> Result<CanonicalChain, CliError> {
    Ok(read_spec(path)?.canonicalize())
}

fn load_pair(pair: &Pair) -> Result<(CanonicalChain, CanonicalChain), CliError> {
    let a = load(&pair.spec)?;
    let b = load(&pair.other)?;
    a.ensure_compatible(&b)?;
    Ok((a, b))
}

fn unsupported(command: &str) -> CliError {
    CliError::Argument(format!("csv output is not available for {command}"))
}

fn emit<T: Serialize>(format: Format, value: &T, text: impl FnOnce() -> String, csv: Option<String>) -> Result<String, CliError> {
    match format {
        Format::Json => Ok(report::to_json(value)),
        Format::Text => Ok(text()),
        Format::Csv => csv.ok_or_else(|| unsupported("this command")),
    }
}

#[derive(Serialize)]
struct ValidateJson<'a> {
    valid: bool,
    symbols: usize,
    states: usize,
    sided: dichotomy_core::Sidedness,
    prefix_len: usize,
    tail: &'a str,
    lambda1: &'a [f64],
}

fn run_command(command: &Command, format: Format) -> Result<String, CliError> {
    match command {
        Command::Validate { spec } => {
            let spec = read_spec(spec)?;
            let chain = spec.canonicalize();
            let tail = match spec.transitions().tail() {
                dichotomy_core::TailRule::Constant(_) => "constant",
                dichotomy_core::TailRule::PowerPerturbation(_) => "power_perturbation",
            };
            let v = ValidateJson {
                valid: true,
                symbols: spec.alphabet().len(),
                states: spec.state_count(),
                sided: spec.sidedness(),
                prefix_len: spec.transitions().explicit_len(),
                tail,
                lambda1: chain.lambda1(),
            };
            let text = || {
                format!(
                    "valid: {} symbols, {} working states, {} explicit transitions, {} tail\n",
                    v.symbols, v.states, v.prefix_len, v.tail
                )
            };
            if format == Format::Csv {
                return Err(unsupported("validate"));
            }
            emit(format, &v, text, None)
        }
        Command::Decide {
            pair,
            delta,
            bigm,
            horizon,
        } => {
            if let Some(d) = delta {
                if !(*d > 0.0 && *d <= 0.5) {
                    return Err(CliError::Argument("--delta must lie in (0, 1/2]".into()));
                }
            }
            if *bigm == Some(0) {
                return Err(CliError::Argument("--bigm must be at least 1".into()));
            }
            let (a, b) = load_pair(pair)?;
            let options = DecideOptions {
                delta: *delta,
                bigm: *bigm,
                horizon: *horizon,
            };
            let r = decide(&a, &b, &options)?;
            emit(format, &r, || report::decision_text(&r), Some(report::series_csv(&r.series)))
        }
        Command::Hellinger { pair, horizon } => {
            let (a, b) = load_pair(pair)?;
            let rows = report::hellinger_table(&a, &b, *horizon)?;
            emit(format, &rows, || report::hellinger_text(&rows), Some(report::hellinger_csv(&rows)))
        }
        Command::Simulate {
            pair,
            horizon,
            samples,
            seed,
            threshold,
        } => {
            if *samples == 0 {
                return Err(CliError::Argument("--samples must be at least 1".into()));
            }
            if *horizon == 0 {
                return Err(CliError::Argument("--horizon must be at least 1".into()));
            }
            if !(threshold.is_finite() && *threshold >= 0.0) {
                return Err(CliError::Argument("--threshold must be finite and non-negative".into()));
            }
            let (a, b) = load_pair(pair)?;
            if format == Format::Csv {
                let batch = parallel::loglr_trajectories(&a, &b, *horizon, *samples, *seed)?;
                return Ok(report::trajectory_csv(&batch));
            }
            let endpoints = parallel::loglr_endpoints(&a, &b, *horizon, *samples, *seed)?;
            let r = SimulationReport {
                seed: *seed,
                horizon: *horizon,
                samples: *samples,
                summary: summarize(&endpoints, *threshold),
            };
            emit(format, &r, || report::simulation_text(&r), None)
        }
        Command::Shift { spec } => {
            let chain = load(spec)?;
            let r = shift_analysis(&chain);
            let json = report::ShiftJson::from(&r);
            emit(format, &json, || report::shift_text(&r), Some(report::series_csv(&r.series)))
        }
        Command::Stationarize { spec, initial } => {
            let chain = load(spec)?;
            let r = stationarize(&chain, initial.as_deref()).map_err(|e| match e {
                Error::InvalidArgument(_) | Error::Shape { .. } | Error::RowSum { .. } | Error::Negative { .. } => {
                    CliError::Argument(format!("--initial: {e}"))
                }
                other => CliError::Analysis(other),
            })?;
            let json = report::StationarizationJson::from(&r);
            emit(format, &json, || report::stationarization_text(&r), Some(report::series_csv(&r.series)))
        }
        Command::OracleCheck {
            pair,
            horizon,
            dump_paths,
        } => {
            let (a, b) = load_pair(pair)?;
            let check = oracle_check(&a, &b, *horizon, &[])?;
            if let Some(path) = dump_paths {
                std::fs::write(path, report::path_table_csv(&joint_paths(&a, &b, *horizon)?))?;
            }
            let out = match format {
                Format::Json => report::to_json(&check),
                Format::Text => report::oracle_text(&check),
                Format::Csv => report::oracle_csv(&check),
            };
            if !check.pass {
                return Err(CliError::OracleMismatch(out));
            }
            Ok(out)
        }
    }
}

/// Runs the CLI and returns its output; used by tests and `main`.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let format = cli.format.unwrap_or(if std::io::stdout().is_terminal() {
        Format::Text
    } else {
        Format::Json
    });
    run_command(&cli.command, format)
}

pub fn write_stdout(out: &str) -> std::io::Result<()> {
    let mut stdout = std::io::stdout().lock();
    match stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => other,
    }
}

pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 3 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(out) => match write_stdout(&out) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: writing output: {e}");
                2
            }
        },
        Err(e) => {
            if let CliError::OracleMismatch(out) = &e {
                let _ = write_stdout(out);
            }
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
