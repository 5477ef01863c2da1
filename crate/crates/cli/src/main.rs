//! `bgk`: data generation, moment and kinetic solves, comparison and
//! eigenvalue audits.
//!
//! Exit status is 0 on success, 1 when a solver failure was recorded (partial
//! outputs are still written) and 2 for usage or input errors.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "bgk", version, about = "Moment-closure and kinetic solvers for the 1D BGK equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate a BGKD trajectory dataset.
    GenData(GenDataArgs),
    /// Run a moment system and write a CSV trajectory.
    Solve(SolveArgs),
    /// Run the discrete-velocity reference and write its moments.
    Dvm(DvmArgs),
    /// Relative L2 errors between two trajectories.
    Compare(CompareArgs),
    /// Minimum eigenvalue gap of a closure along a trajectory.
    EigenAudit(AuditArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosureArg {
    Grad,
    Hme,
    Ml,
    MlNonhyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SchemeArg {
    Roe,
    LaxFriedrichs,
    Force,
    HighOrderRoe,
    HighOrderForce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathArg {
    Linear,
    Minus,
    Plus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum CollisionArg {
    Explicit,
    SplitExact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IcArg {
    Wave,
    Mix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorArg {
    Hme,
    Dvm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum DvmSchemeArg {
    Imex,
    SplitExact,
}

/// Initial condition and grid shared by `solve` and `dvm`. The same seed
/// gives the same initial data in both.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ProblemArgs {
    /// Relaxation time; drawn from the seed when omitted.
    #[arg(long)]
    pub kn: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub t_final: f64,
    #[arg(long, value_enum, default_value_t = IcArg::Wave)]
    pub ic: IcArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 256)]
    pub cells: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub x_min: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub x_max: f64,
    /// Equally spaced output times after the initial one.
    #[arg(long, default_value_t = 10)]
    pub snapshots: usize,
    #[arg(long, default_value = "bgk-run")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    #[arg(long, value_enum, default_value_t = ClosureArg::Hme)]
    pub closure: ClosureArg,
    /// Truncation order M.
    #[arg(long, default_value_t = 4)]
    pub moments: usize,
    #[arg(long, value_enum, default_value_t = SchemeArg::HighOrderRoe)]
    pub scheme: SchemeArg,
    /// MLCW weights for the learned closures.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PathArg::Linear)]
    pub path: PathArg,
    #[arg(long, default_value_t = 2)]
    pub path_degree: u32,
    #[arg(long, default_value_t = 3)]
    pub quadrature: usize,
    #[arg(long, default_value_t = 0.5)]
    pub cfl: f64,
    #[arg(long, value_enum, default_value_t = CollisionArg::Explicit)]
    pub collision: CollisionArg,
    #[command(flatten)]
    pub problem: ProblemArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DvmArgs {
    /// Highest moment written per cell.
    #[arg(long, default_value_t = 4)]
    pub moments: usize,
    #[arg(long, default_value_t = 150)]
    pub velocities: usize,
    #[arg(long, default_value_t = 10.0)]
    pub v_max: f64,
    #[arg(long, value_enum, default_value_t = DvmSchemeArg::Imex)]
    pub scheme: DvmSchemeArg,
    #[arg(long, default_value_t = 0.5)]
    pub cfl: f64,
    #[command(flatten)]
    pub problem: ProblemArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenDataArgs {
    #[arg(long, value_enum, default_value_t = GeneratorArg::Hme)]
    pub generator: GeneratorArg,
    #[arg(long, value_enum, default_value_t = IcArg::Wave)]
    pub ic: IcArg,
    #[arg(long, default_value_t = 4)]
    pub moments: usize,
    #[arg(long, default_value_t = 8)]
    pub ics: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Grid cells; the generator default when omitted.
    #[arg(long)]
    pub cells: Option<usize>,
    #[arg(long)]
    pub t_final: Option<f64>,
    /// Saved times per trajectory.
    #[arg(long)]
    pub times: Option<usize>,
    #[arg(long)]
    pub kn_min: Option<f64>,
    #[arg(long)]
    pub kn_max: Option<f64>,
    #[arg(long, value_enum, default_value_t = SchemeArg::HighOrderRoe)]
    pub scheme: SchemeArg,
    #[arg(long, default_value = "bgk-data")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    /// Reference trajectory directory.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Trajectory directory under test.
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "rho,u,theta")]
    pub fields: Vec<String>,
    /// Also write `compare.csv` and a manifest here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AuditArgs {
    #[arg(long, value_enum, default_value_t = ClosureArg::Ml)]
    pub closure: ClosureArg,
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[arg(long)]
    pub trajectory: PathBuf,
    #[arg(long, default_value = "bgk-audit")]
    pub out: PathBuf,
}

/// How a command finished.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    SolverFailure,
}

fn thread_cap() -> Result<(), String> {
    match std::env::var("BGK_THREADS") {
        Ok(v) => {
            let n: usize = v.trim().parse().map_err(|_| format!("BGK_THREADS={v:?} is not a positive integer"))?;
            if n == 0 {
                return Err("BGK_THREADS must be positive".into());
            }
            if !bgk_closure::parallel::init_thread_pool(n) {
                log::warn!("worker pool already initialised; BGK_THREADS ignored");
            }
            Ok(())
        }
        Err(_) => Ok(()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(msg) = thread_cap() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match commands::dispatch(&cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::SolverFailure) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
