//! `cvforge`: learn photonic circuits from JSON experiment configs.
//!
//! Exit codes: 0 success, 2 config error, 3 cutoff too small for the target,
//! 4 numerical failure, 1 for any other I/O problem.

mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{ExperimentConfig, Overrides, Task};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Cutoff(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Cutoff(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<cvforge::Error> for CliError {
    fn from(e: cvforge::Error) -> Self {
        use cvforge::Error as E;
        match e {
            E::LeakyCutoff { .. } | E::InsufficientCutoff { .. } => CliError::Cutoff(e.to_string()),
            E::NonFinite(_) | E::NonConvergent { .. } => CliError::Numerical(e.to_string()),
            E::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "cvforge", version, about = "Learn continuous-variable photonic circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a circuit that prepares a target state from vacuum.
    Prepare(RunArgs),
    /// Train a circuit that reproduces a target gate on its input block.
    Synthesize(RunArgs),
    /// Mean best cost as a function of network depth.
    Sweep(RunArgs),
    /// Re-evaluate saved parameters against a config's target.
    Analyze(AnalyzeArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Run even if the cutoff leaks target norm; the margin is recorded.
    #[arg(long)]
    allow_leaky: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Parameter JSON written by `prepare` or `synthesize`.
    #[arg(long)]
    params: PathBuf,
}

fn load(common: &CommonArgs, overrides: Overrides, task: Task) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    cfg.apply(&Overrides {
        output_dir: common.output_dir.clone(),
        ..overrides
    });
    if task != Task::Analyze && cfg.task != task {
        return Err(CliError::Config(format!(
            "field `task`: config is for `{}`, command is `{}`",
            task_name(cfg.task),
            task_name(task)
        )));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn task_name(t: Task) -> &'static str {
    match t {
        Task::Prepare => "prepare",
        Task::Synthesize => "synthesize",
        Task::Sweep => "sweep",
        Task::Analyze => "analyze",
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Prepare(a) => run_task(a, Task::Prepare),
        Command::Synthesize(a) => run_task(a, Task::Synthesize),
        Command::Sweep(a) => run_task(a, Task::Sweep),
        Command::Analyze(a) => {
            let cfg = load(&a.common, Overrides::default(), Task::Analyze)?;
            commands::analyze(&cfg, &a.params, a.common.allow_leaky)
        }
    }
}

fn run_task(a: RunArgs, task: Task) -> Result<(), CliError> {
    let overrides = Overrides {
        steps: a.steps,
        seed: a.seed,
        restarts: a.restarts,
        output_dir: None,
    };
    let cfg = load(&a.common, overrides, task)?;
    match task {
        Task::Sweep => commands::sweep(&cfg, a.common.allow_leaky),
        _ => commands::train(&cfg, task, a.common.allow_leaky),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
