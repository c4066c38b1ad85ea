//! Argument parsing and exit codes for the `ramsey` binary.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{ExperimentConfig, ExperimentKind, Overrides};
use crate::{execute, RunArtifacts};

/// Exit status for a config that fails to parse or validate.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for a numerical or I/O failure during the run.
pub const EXIT_FAILURE: i32 = 1;

#[derive(Parser)]
#[command(
    name = "ramsey",
    version,
    about = "Ramsey spectroscopy sweeps and Monte Carlo runs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cramér–Rao bounds over N and γ.
    CrbSweep(Common),
    /// Posterior density of one scheme.
    Posterior(Common),
    /// Optimized combination scheme per atom budget.
    SchemeOpt(Common),
    /// Repeated sampled estimates of one scheme.
    MonteCarlo(Common),
    /// Closed form against the master-equation integrator.
    OracleCheck(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config or a previous run.json.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Root directory for run folders.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    #[arg(long)]
    grid_points: Option<usize>,
    /// Override any config field, e.g. `--set gamma=0.05`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug)]
pub enum Outcome {
    Done(RunArtifacts),
    /// `--help` or `--version` text.
    Info(String),
    /// Invalid arguments or config; message already formatted.
    Rejected(String),
    Failed(anyhow::Error),
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Done(_) | Outcome::Info(_) => 0,
            Outcome::Rejected(_) => EXIT_CONFIG,
            Outcome::Failed(_) => EXIT_FAILURE,
        }
    }
}

/// Parses `args` (including the program name) and runs the experiment.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => return Outcome::Info(e.render().to_string()),
        Err(e) => return Outcome::Rejected(e.render().to_string()),
    };
    let (kind, common) = match cli.command {
        Command::CrbSweep(c) => (ExperimentKind::CrbSweep, c),
        Command::Posterior(c) => (ExperimentKind::Posterior, c),
        Command::SchemeOpt(c) => (ExperimentKind::SchemeOpt, c),
        Command::MonteCarlo(c) => (ExperimentKind::MonteCarlo, c),
        Command::OracleCheck(c) => (ExperimentKind::OracleCheck, c),
    };
    let overrides = Overrides {
        seed: common.seed,
        grid_points: common.grid_points,
        set: common.set,
    };
    let cfg = common
        .config
        .as_deref()
        .map(ExperimentConfig::load_value)
        .transpose()
        .and_then(|file| ExperimentConfig::resolve(file, kind, &overrides));
    match cfg {
        Ok(cfg) => match execute(&cfg, &common.out) {
            Ok(run) => Outcome::Done(run),
            Err(e) => Outcome::Failed(e),
        },
        Err(e) => Outcome::Rejected(format!("error: {e}")),
    }
}
