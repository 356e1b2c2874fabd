//! Batch command-line surface tying the library modules together.
//!
//! Every subcommand reads JSON inputs in the measure / pair / quadruplet
//! schemas, runs one library operation, and writes artifacts (JSON reports
//! and plot-ready CSV) into the output directory. Artifacts are a pure
//! function of the configuration and seed: identical invocations produce
//! byte-identical files, and each file embeds the tool version together with
//! a hash of the configuration that produced it.
//!
//! Exit codes: 0 success, 1 criterion failure, 2 malformed input,
//! 3 numeric failure, 4 invariant violation.

pub mod artifact;
pub mod cmd_boolean;
pub mod cmd_correspond;
pub mod cmd_invert;
pub mod cmd_sector;
pub mod cmd_simulate;
pub mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CRITERION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

/// A terminal failure: the process exit code plus a message for stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure { code: EXIT_INPUT, message: message.into() }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Failure { code: EXIT_NUMERIC, message: message.into() }
    }

    pub fn invariant(message: impl Into<String>) -> Self {
        Failure { code: EXIT_INVARIANT, message: message.into() }
    }
}

impl From<ggc_cbi::Error> for Failure {
    fn from(e: ggc_cbi::Error) -> Self {
        use ggc_cbi::Error::*;
        let code = match e {
            Input(_) | Domain(_) => EXIT_INPUT,
            Inconclusive(_) | Solver(_) | Consistency(_) | NonErgodic(_) => EXIT_NUMERIC,
            Invariant(_) => EXIT_INVARIANT,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::input(format!("io error: {e}"))
    }
}

pub type CliResult = Result<i32, Failure>;

#[derive(Parser)]
#[command(
    name = "ggc-cbi",
    version,
    about = "Generalized gamma convolutions and their branching mechanisms: \
             correspondence runs, sector reports, simulation, inversion, \
             boolean convolution, verification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Args, Clone)]
pub struct GlobalArgs {
    /// Tolerance gate on the command's primary residual (positive; commands
    /// without a residual ignore it). `verify` uses it to replace the
    /// deterministic tolerance of every criterion.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// Directory receiving the output artifacts.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Seed for every random draw the command makes.
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,

    /// Also print the primary JSON artifact on stdout.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Subcommand)]
pub enum Command {
    /// Map a stationary pair (q, m) to its mechanism triple (a, b, M) or back.
    Correspond(CorrespondArgs),
    /// Sector-constant report for a stationary pair or mechanism quadruplet.
    Sector(SectorArgs),
    /// Euler-scheme path ensemble with Laplace-transform comparison.
    Simulate(SimulateArgs),
    /// Recover a measure from boundary values of its Stieltjes transform.
    Invert(InvertArgs),
    /// Boolean convolution algebra: conv, power, fixed point.
    Boolean(BooleanArgs),
    /// Run the acceptance criteria and report pass/fail per criterion.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    /// (q, m) to (a, b, M).
    Forward,
    /// (a, b, M) to (q, m).
    Backward,
}

#[derive(Args)]
pub struct CorrespondArgs {
    /// Direction of the map.
    #[arg(value_enum)]
    pub direction: Direction,

    /// Input JSON: {"q":..,"m":{..}} for forward,
    /// {"a":..,"b":..,"M":{..}} for backward.
    pub input: PathBuf,
}

#[derive(Args)]
pub struct SectorArgs {
    /// Input JSON: a stationary pair {"q","m"} or a mechanism quadruplet
    /// {"a","b","M","delta"}.
    pub input: PathBuf,

    /// Immigration weight; used when the input is a stationary pair (a
    /// quadruplet carries its own).
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,

    /// Strictly increasing λ-grid spanning the exponential test functions.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.25, 0.5, 1.0, 2.0, 4.0])]
    pub grid: Vec<f64>,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Input JSON: mechanism quadruplet {"a","b","M","delta"} with atomic M.
    pub input: PathBuf,

    /// Initial state.
    #[arg(long, default_value_t = 1.0)]
    pub x0: f64,

    /// Time horizon.
    #[arg(long, default_value_t = 10.0)]
    pub horizon: f64,

    /// Euler step; default 10⁻³ scaled down when mean reversion is fast.
    #[arg(long)]
    pub dt: Option<f64>,

    /// Number of independent paths.
    #[arg(long, default_value_t = ggc_cbi::simulate::DEFAULT_PATHS)]
    pub paths: usize,

    /// Strictly increasing λ-grid for the terminal Laplace comparison.
    #[arg(long = "lambda-grid", value_delimiter = ',', default_values_t = vec![0.25, 0.5, 1.0, 2.0, 4.0])]
    pub lambda_grid: Vec<f64>,
}

#[derive(Args)]
pub struct InvertArgs {
    /// Input JSON measure whose Stieltjes transform is inverted.
    pub input: PathBuf,

    /// Lower end of the abscissa grid; default just inside the support.
    #[arg(long)]
    pub x_min: Option<f64>,

    /// Upper end of the abscissa grid; default the support edge, or ten
    /// scale units past it for unbounded measures.
    #[arg(long)]
    pub x_max: Option<f64>,

    /// Number of abscissae.
    #[arg(long, default_value_t = 101)]
    pub points: usize,

    /// Top rung of the halving offset ladder.
    #[arg(long, default_value_t = 1e-4)]
    pub y0: f64,

    /// Number of ladder rungs (≥ 3).
    #[arg(long, default_value_t = 7)]
    pub rungs: usize,
}

#[derive(Args)]
pub struct BooleanArgs {
    #[command(subcommand)]
    pub op: BooleanOp,
}

#[derive(Subcommand)]
pub enum BooleanOp {
    /// Boolean convolution of two probability measures.
    Conv {
        /// First probability measure (JSON).
        m1: PathBuf,
        /// Second probability measure (JSON).
        m2: PathBuf,
    },
    /// Boolean convolution power m^{⊎t}.
    Pow {
        /// Probability measure (JSON).
        m: PathBuf,
        /// Power exponent t > 0.
        #[arg(long)]
        t: f64,
    },
    /// Stationary pair whose spectral measure equals its own Thorin measure.
    FixedPoint {
        /// Translation term q ≥ 0.
        #[arg(long, default_value_t = 0.0)]
        q: f64,
        /// Diffusion constant a ≥ 0.
        #[arg(long)]
        a: f64,
        /// Drift constant b ≥ 0.
        #[arg(long)]
        b: f64,
    },
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Restrict the run to these criterion numbers (1..=10); empty = all.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<usize>,
}

/// Full dispatch; returns the process exit code.
pub fn run(cli: Cli) -> CliResult {
    if let Some(t) = cli.global.tol {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Failure::input(format!("--tol must be positive and finite, got {t}")));
        }
    }
    match cli.command {
        Command::Correspond(args) => cmd_correspond::run(&args, &cli.global),
        Command::Sector(args) => cmd_sector::run(&args, &cli.global),
        Command::Simulate(args) => cmd_simulate::run(&args, &cli.global),
        Command::Invert(args) => cmd_invert::run(&args, &cli.global),
        Command::Boolean(args) => cmd_boolean::run(&args, &cli.global),
        Command::Verify(args) => verify::run_command(&args, &cli.global),
    }
}

/// Grid flags must be strictly increasing before they reach the library.
pub fn require_increasing(name: &str, grid: &[f64]) -> Result<(), Failure> {
    if grid.is_empty() {
        return Err(Failure::input(format!("--{name} must not be empty")));
    }
    if grid.iter().any(|v| !v.is_finite()) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Failure::input(format!(
            "--{name} must be finite and strictly increasing, got {grid:?}"
        )));
    }
    Ok(())
}
