//! `epsk1`: batch verifier for local epsilon elements and the K₁ congruences
//! of tame metabelian towers. Exit codes: 0 all checks pass, 1 a mathematical
//! check failed, 2 schema or realizability violation, 3 resource cap.

mod commands;
mod input;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use epsk1_core::k1::MSelection;
use epsk1_core::residue::DEFAULT_CAP;
use epsk1_core::Error;
use serde::Serialize;
use serde_json::Value;

#[derive(Parser, Debug)]
#[command(name = "epsk1", version, about = "Exact epsilon elements and K1 congruence checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Input file (TOML or JSON)
    #[arg(long, global = true)]
    input: Option<PathBuf>,

    /// Report file; standard output when absent
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// p-adic precision M for the integral logarithm
    #[arg(long, global = true, default_value_t = 6)]
    precision: u32,

    /// Enumeration cap on units, group elements and characters
    #[arg(long, global = true, env = "EPSK1_CAP", default_value_t = DEFAULT_CAP)]
    cap: u64,

    /// Seed for synthetic data and random trials
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Conditions checked by tower-verify (comma separated)
    #[arg(long, global = true, value_enum, value_delimiter = ',', default_value = "all")]
    check: Vec<Check>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Gauss sums of the characters of a datum, with the functional equation
    GaussSum,
    /// The abelian epsilon element of a datum
    EpsAbelian,
    /// Evaluation, projection, c-independence and transformation laws
    PropertySuite,
    /// Coherence of a tame tower and M1-M3 for its epsilon tuple
    TowerVerify,
    /// The additive map beta on class elements, with A1-A3
    BetaCheck,
    /// The integral logarithm of a tuple, with A1-A3 mod p^M
    IntegralLog,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::GaussSum => "gauss-sum",
            Command::EpsAbelian => "eps-abelian",
            Command::PropertySuite => "property-suite",
            Command::TowerVerify => "tower-verify",
            Command::BetaCheck => "beta-check",
            Command::IntegralLog => "integral-log",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
enum Check {
    M1,
    M2,
    M3,
    All,
}

fn selection(checks: &[Check]) -> MSelection {
    if checks.contains(&Check::All) {
        return MSelection::ALL;
    }
    MSelection {
        m1: checks.contains(&Check::M1),
        m2: checks.contains(&Check::M2),
        m3: checks.contains(&Check::M3),
    }
}

/// Why a job could not produce a verdict.
#[derive(Debug)]
pub enum Failure {
    Schema(String),
    Core(Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(Error::Resource { .. }) => 3,
            Failure::Core(Error::Coherence(_)) | Failure::Core(Error::Convergence(_)) => 1,
            _ => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Schema(_) => "schema",
            Failure::Core(e) => match e {
                Error::Invalid(_) => "invalid",
                Error::Resource { .. } => "resource",
                Error::NotCoprime(_) => "not_coprime",
                Error::NoSurjection(_) => "no_surjection",
                Error::Realizability(_) => "realizability",
                Error::Coherence(_) => "coherence",
                Error::NotUnit(_) => "not_unit",
                Error::Convergence(_) => "convergence",
                Error::Unramified(_) => "unramified",
                Error::NotSubgroup(_) => "not_subgroup",
                Error::Serialization(_) => "serialization",
            },
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Schema(m) => write!(f, "{m}"),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

/// Flags that influence the result, echoed in every report.
#[derive(Serialize, Debug, Clone)]
pub struct Options {
    pub precision: u32,
    pub cap: u64,
    pub seed: u64,
    pub check: MSelection,
}

/// What a command hands back: the effective input and the result.
pub struct Outcome {
    pub input: Value,
    pub format: input::Format,
    pub passed: bool,
    pub result: Value,
}

#[derive(Serialize)]
struct Report<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    options: &'a Options,
    #[serde(skip_serializing_if = "Option::is_none")]
    input_format: Option<input::Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    passed: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<ErrorReport>,
}

#[derive(Serialize)]
struct ErrorReport {
    kind: &'static str,
    message: String,
}

fn run(cli: &Cli, opts: &Options) -> Result<Outcome, Failure> {
    let path = cli
        .input
        .as_deref()
        .ok_or_else(|| Failure::Schema("--input is required".into()))?;
    match cli.command {
        Command::GaussSum => commands::gauss_sum(path, opts),
        Command::EpsAbelian => commands::eps_abelian(path, opts),
        Command::PropertySuite => commands::property_suite(path, opts),
        Command::TowerVerify => commands::tower_verify(path, opts),
        Command::BetaCheck => commands::beta_check(path, opts),
        Command::IntegralLog => commands::integral_log(path, opts),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = Options { precision: cli.precision, cap: cli.cap, seed: cli.seed, check: selection(&cli.check) };
    let outcome = run(&cli, &opts);
    let mut report = Report {
        tool: "epsk1",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name(),
        options: &opts,
        input_format: None,
        input: None,
        passed: None,
        result: None,
        error: None,
    };
    let code = match outcome {
        Ok(o) => {
            report.input_format = Some(o.format);
            report.input = Some(o.input);
            report.passed = Some(o.passed);
            report.result = Some(o.result);
            if o.passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("epsk1: {}: {e}", e.kind());
            report.error = Some(ErrorReport { kind: e.kind(), message: e.to_string() });
            e.exit_code()
        }
    };
    let mut text = match serde_json::to_string_pretty(&report) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("epsk1: cannot serialize report: {e}");
            return ExitCode::from(2);
        }
    };
    text.push('\n');
    let written = match &cli.output {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("epsk1: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(code)
}
