use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use ball_accel_cli::{emit_plotdata, error_document, run, CliError, RunConfig, StrategyKind, Task};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Accelerated ball-oracle solvers, scaling benchmarks and lower-bound
/// experiments. Set BALL_ACCEL_LOG (error, warn, info, debug) for logging.
#[derive(Debug, Parser)]
#[command(name = "ball-accel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a regression problem.
    Solve {
        #[command(subcommand)]
        task: SolveTask,
    },
    /// Oracle-call scaling benchmarks.
    Bench {
        #[command(subcommand)]
        kind: BenchKind,
    },
    /// Progress of query strategies on the hard chain instance.
    Lowerbound(LowerArgs),
    /// Run from a TOML configuration file.
    Run {
        config: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum SolveTask {
    /// Logistic regression; the last CSV column holds ±1 labels.
    Logistic(SolveArgs),
    /// Minimize ‖Ax − b‖∞.
    Linf(SolveArgs),
    /// Minimize ‖Ax − b‖ₚᵖ to relative accuracy δ.
    Lp(SolveArgs),
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Dense CSV, last column is the target. Synthetic data when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    /// Bound on ‖x₀ − x*‖_M. When absent: a residual bound for linf, an uncertified estimate for logistic.
    #[arg(long)]
    radius: Option<f64>,
    /// Synthetic instance size.
    #[arg(long, default_value_t = 100)]
    rows: usize,
    #[arg(long, default_value_t = 10)]
    cols: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Plot data CSV path.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// TOML file overriding solver constants.
    #[arg(long)]
    constants: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum BenchKind {
    /// Accelerated loop against the iterated-ball baseline.
    Scaling(ScalingArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BenchTask {
    Logistic,
}

#[derive(Debug, Args)]
struct ScalingArgs {
    #[arg(long, value_enum, default_value_t = BenchTask::Logistic)]
    task: BenchTask,
    /// Distances R at r = 1.
    #[arg(long, value_delimiter = ',', conflicts_with = "ratios")]
    radii: Option<Vec<f64>>,
    /// Ratios R/r at R = 8 (default 8,16,32,64).
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 100)]
    rows: usize,
    #[arg(long, default_value_t = 10)]
    cols: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct LowerArgs {
    /// Chain length N; r is set so that N = ⌊(R/r)^{2/3}/10⌋.
    #[arg(long, default_value_t = 8)]
    chain: usize,
    /// Domain radius R.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, value_enum, default_value_t = Strategy::Subgradient)]
    strategy: Strategy,
    /// Also sweep these R/r for the query-count scaling fit.
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Strategy {
    Subgradient,
    Greedy,
    Random,
}

fn with_output(mut cfg: RunConfig, out: OutputArgs) -> RunConfig {
    cfg.out = out.out;
    cfg.trace = out.trace;
    cfg.constants = out.constants;
    cfg
}

fn to_config(cmd: Command) -> Result<RunConfig, CliError> {
    Ok(match cmd {
        Command::Run { config } => RunConfig::load(&config)?,
        Command::Solve { task } => {
            let (task, a) = match task {
                SolveTask::Logistic(a) => (Task::Logistic, a),
                SolveTask::Linf(a) => (Task::Linf, a),
                SolveTask::Lp(a) => (Task::Lp, a),
            };
            let mut cfg = RunConfig::new(task);
            cfg.data = a.data;
            cfg.eps = a.eps;
            cfg.delta = a.delta;
            cfg.p = a.p;
            cfg.radius = a.radius;
            cfg.rows = a.rows;
            cfg.cols = a.cols;
            cfg.seed = a.seed;
            with_output(cfg, a.output)
        }
        Command::Bench {
            kind: BenchKind::Scaling(a),
        } => {
            let BenchTask::Logistic = a.task;
            let mut cfg = RunConfig::new(Task::BenchScaling);
            cfg.radii = a.radii;
            cfg.ratios = a.ratios;
            cfg.seeds = a.seeds;
            cfg.eps = a.eps;
            cfg.rows = a.rows;
            cfg.cols = a.cols;
            with_output(cfg, a.output)
        }
        Command::Lowerbound(a) => {
            let mut cfg = RunConfig::new(Task::Lowerbound);
            cfg.chain = a.chain;
            cfg.radius = a.radius;
            cfg.trials = a.trials;
            cfg.strategy = match a.strategy {
                Strategy::Subgradient => StrategyKind::Subgradient,
                Strategy::Greedy => StrategyKind::Greedy,
                Strategy::Random => StrategyKind::Random,
            };
            cfg.ratios = a.ratios;
            cfg.seed = a.seed;
            with_output(cfg, a.output)
        }
    })
}

fn write(path: &PathBuf, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })
}

fn execute(cmd: Command) -> Result<(), CliError> {
    let cfg = to_config(cmd)?;
    let report = run(&cfg)?;
    let json = report.to_json()?;
    if let Some(path) = &cfg.trace {
        write(path, &emit_plotdata(&report)?)?;
    }
    match &cfg.out {
        Some(path) => write(path, &json)?,
        None => print_stdout(&json),
    }
    Ok(())
}

/// A closed pipe (`| head`) is not an error worth reporting.
fn print_stdout(text: &str) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = writeln!(out, "{text}") {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            log::error!("writing to stdout: {e}");
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BALL_ACCEL_LOG", "warn"))
        .format_timestamp(None)
        .init();
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            print_stdout(&error_document(&e));
            ExitCode::FAILURE
        }
    }
}
