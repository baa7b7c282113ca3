//! `gelfand` command-line front end.
//!
//! Exit codes: 0 success, 1 tolerance violation, 2 input or validation
//! error, 3 algebraic failure (a Reynolds image outside the generator
//! algebra). Failures print a one-line JSON diagnostic on stderr.

mod commands;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gelfand::Error;

#[derive(Parser, Debug)]
#[command(
    name = "gelfand",
    version,
    about = "Spherical functions and invariant reconstruction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a pair and test the special assumption.
    PairCheck {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        params: Params,
    },
    /// Dump the b and a coefficient tables.
    Coeffs {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        params: Params,
        #[arg(long, value_enum, default_value_t = Table::Both)]
        table: Table,
    },
    /// Run a verification suite.
    Verify {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        params: Params,
        #[arg(long, value_enum)]
        suite: Suite,
        /// Test function on the frequency side (schwarz suite).
        #[arg(long, default_value = "bump")]
        function: String,
        /// Support radius of the test function.
        #[arg(long, default_value_t = 1.0)]
        support: f64,
        /// Number of test points (symmetry and schwarz suites).
        #[arg(long, default_value_t = 100)]
        points: usize,
        /// Radius of the ball the test points are drawn from.
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Tutorial artifacts for a built-in pair.
    Demo {
        name: String,
        #[command(flatten)]
        params: Params,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Pair spec JSON file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Built-in pair name.
    #[arg(long)]
    pub builtin: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct Params {
    #[arg(long)]
    pub max_degree: Option<u32>,
    #[arg(long)]
    pub quad_radius: Option<f64>,
    #[arg(long)]
    pub quad_nodes: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Table {
    A,
    B,
    Both,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Eigen,
    Symmetry,
    Special,
    Schwarz,
}

#[derive(Debug)]
pub enum CliError {
    Lib(Error),
    Io { path: String, message: String },
    Tolerance { message: String },
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Tolerance { .. } => 1,
            CliError::Io { .. } => 2,
            CliError::Lib(e) => match e {
                Error::NotExpressible { .. } | Error::IncompleteGenerators { .. } => 3,
                Error::UnstableTruncation { .. } => 1,
                _ => 2,
            },
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Tolerance { .. } => "tolerance",
            CliError::Io { .. } => "io",
            CliError::Lib(e) => error_kind(e),
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Lib(e) => e.to_string(),
            CliError::Io { path, message } => format!("{path}: {message}"),
            CliError::Tolerance { message } => message.clone(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::NotSquare { .. } => "not_square",
        Error::NotOrthogonal { .. } => "not_orthogonal",
        Error::DuplicateElement { .. } => "duplicate_element",
        Error::MissingIdentity => "missing_identity",
        Error::NotClosed { .. } => "not_closed",
        Error::UnsupportedGroup(_) => "unsupported_group",
        Error::NoGenerators => "no_generators",
        Error::ZeroGenerator { .. } => "zero_generator",
        Error::NotHomogeneous { .. } => "not_homogeneous",
        Error::NotInvariant { .. } => "not_invariant",
        Error::NotExpressible { .. } => "not_expressible",
        Error::IncompleteGenerators { .. } => "incomplete_generators",
        Error::IndexOutOfRange { .. } => "index_out_of_range",
        Error::InsufficientDepth { .. } => "insufficient_depth",
        Error::SpecialAssumptionFails { .. } => "special_assumption_fails",
        Error::SupportViolation { .. } => "support_violation",
        Error::InvarianceAudit { .. } => "invariance_audit",
        Error::UnstableTruncation { .. } => "unstable_truncation",
        Error::QuadratureDimension(_) => "quadrature_dimension",
        Error::InvalidParameter(_) => "invalid_parameter",
        Error::Parse(_) => "parse",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::PairCheck { source, params } => commands::pair_check(&source, &params),
        Command::Coeffs {
            source,
            params,
            table,
        } => commands::coeffs(&source, &params, table),
        Command::Verify {
            source,
            params,
            suite,
            function,
            support,
            points,
            radius,
            seed,
        } => commands::verify(
            &source,
            &params,
            &commands::VerifyOptions {
                suite,
                function,
                support,
                points,
                radius,
                seed,
            },
        ),
        Command::Demo { name, params } => commands::demo(&name, &params),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            let diag = serde_json::json!({
                "error": e.kind(),
                "message": e.message(),
                "exit_code": code,
            });
            eprintln!("{diag}");
            ExitCode::from(code)
        }
    }
}
