//! The `instanton` command-line tool.
//!
//! One subcommand per pipeline stage. Every document repeats its inputs
//! (including resolved defaults), the potential normalization and the tool
//! version, so equal invocations give byte-identical output.
//!
//! Exit status: 0 on success, 1 for invalid configuration or I/O problems,
//! 2 when a numerical stage fails (including a failed `selftest`). Errors are
//! a single line on stderr: `error: validation: …`, `error: io: …` or
//! `error: numeric: <operation>: <Variant>: …`.
//!
//! CSV layouts:
//!
//! - `profile`: `tau,x,dxdtau`
//! - `density --sweep`: `omega,action,density,E0,E1,E2`
//! - `compare`: `omega,level,exact,parity,predicted,difference`
//! - `sweep`: `omega,action,density,dilute,predicted_E0..2,exact_E0..2,parity0..2`
//! - anything else: `field,value` with dotted paths into the JSON result

mod commands;
pub mod output;
mod selftest;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

pub use output::Format;

#[derive(Debug, Parser)]
#[command(
    name = "instanton",
    version,
    about = "Instanton calculus for the triple-well potential V = (omega^2/2) x^2 (x^2 - 1)^2",
    allow_negative_numbers = true
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Frequency parameter of the potential.
    #[arg(
        long,
        global = true,
        allow_hyphen_values = true,
        default_value_t = 10.0
    )]
    pub omega: f64,
    /// Euclidean time extent [default: 30/omega].
    #[arg(
        long = "T",
        global = true,
        allow_hyphen_values = true,
        value_name = "T"
    )]
    pub big_t: Option<f64>,
    /// Half-width of the diagonalization domain [-L, L].
    #[arg(
        long = "L",
        global = true,
        allow_hyphen_values = true,
        value_name = "L",
        default_value_t = 3.0
    )]
    pub half_width: f64,
    /// Number of grid points for diagonalizations.
    #[arg(long = "N", global = true, value_name = "N", default_value_t = 4000)]
    pub points: usize,
    /// Reference oscillator frequency [default: 3*omega/2].
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub nu: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Instanton profile samples (tau, x, dx/dtau).
    Profile {
        /// Sample tau in [-tau_max, tau_max] [default: 10/omega].
        #[arg(long, allow_hyphen_values = true)]
        tau_max: Option<f64>,
        #[arg(long, default_value_t = 201)]
        samples: usize,
        /// Build the profile by quadrature instead of the closed form.
        #[arg(long)]
        numeric: bool,
    },
    /// Classical action computed three ways, with tail constants.
    Action,
    /// Fluctuation determinant report.
    Determinant,
    /// Instanton density, or a table over a range of omega.
    Density {
        /// Tabulate over start:end:step.
        #[arg(long, value_name = "START:END:STEP")]
        sweep: Option<OmegaRange>,
    },
    /// Predicted energy triplet.
    Spectrum,
    /// Finite-difference spectrum of the Hamiltonian.
    Oracle {
        /// Number of states.
        #[arg(long, default_value_t = 3)]
        states: usize,
    },
    /// Exact versus predicted triplet.
    Compare,
    /// Density, predicted and exact triplets over a range of omega.
    Sweep {
        #[arg(long, value_name = "START:END:STEP")]
        omega_range: OmegaRange,
    },
    /// Run the internal consistency checks.
    Selftest {
        /// Re-validate a saved `determinant` JSON document instead.
        #[arg(long, value_name = "PATH")]
        check_file: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Profile { .. } => "profile",
            Command::Action => "action",
            Command::Determinant => "determinant",
            Command::Density { .. } => "density",
            Command::Spectrum => "spectrum",
            Command::Oracle { .. } => "oracle",
            Command::Compare => "compare",
            Command::Sweep { .. } => "sweep",
            Command::Selftest { .. } => "selftest",
        }
    }
}

/// `start:end:step`, inclusive of `end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaRange {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl OmegaRange {
    pub const MAX_POINTS: usize = 10_000;

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.end - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl FromStr for OmegaRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected START:END:STEP, got '{s}'"));
        }
        let parse = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("'{p}' is not a number"))
        };
        let (start, end, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if !(start.is_finite() && start > 0.0) {
            return Err(format!("start must be positive (got {start})"));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(format!("step must be positive (got {step})"));
        }
        if !(end.is_finite() && end >= start) {
            return Err(format!("end must be at least start (got {end})"));
        }
        if (end - start) / step >= Self::MAX_POINTS as f64 {
            return Err(format!("more than {} points", Self::MAX_POINTS));
        }
        Ok(OmegaRange { start, end, step })
    }
}

impl fmt::Display for OmegaRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.end, self.step)
    }
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
    Numeric {
        operation: &'static str,
        variant: String,
        message: String,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::Numeric { .. } => 2,
        }
    }

    /// Wraps a library error raised by `operation`.
    pub fn numeric<E: fmt::Debug + fmt::Display>(
        operation: &'static str,
    ) -> impl Fn(E) -> CliError {
        move |e| CliError::Numeric {
            operation,
            variant: variant_name(&e),
            message: e.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "error: validation: {m}"),
            CliError::Io(m) => write!(f, "error: io: {m}"),
            CliError::Numeric {
                operation,
                variant,
                message,
            } => write!(f, "error: numeric: {operation}: {variant}: {message}"),
        }
    }
}

/// Variant path from the `Debug` form: `Fluctuation(BoxTooSmall { .. })`
/// gives `Fluctuation::BoxTooSmall`.
fn variant_name<E: fmt::Debug>(e: &E) -> String {
    let text = format!("{e:?}");
    let mut rest = text.as_str();
    let mut path = Vec::new();
    loop {
        let end = rest
            .find(|c: char| !(c.is_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        path.push(&rest[..end]);
        rest = &rest[end..];
        match rest.strip_prefix('(') {
            Some(inner) if inner.starts_with(|c: char| c.is_ascii_uppercase()) => rest = inner,
            _ => break,
        }
    }
    path.join("::")
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                eprint!("{e}");
                return 1;
            }
            let text = e.to_string();
            let first = text
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            eprintln!("error: validation: {first}");
            return 1;
        }
    };
    match commands::execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_string().replace('\n', " "));
            e.exit_code()
        }
    }
}
