use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pcga::benchmarks::FitnessFunction;
use pcga::harness::{fit_loglog_slope, load_config, read_csv_file, run_sweep, Metric, Settings};
use pcga::net::{
    worker_run, CheckpointPolicy, Manager, ManagerConfig, TerminationPolicy, WorkerConfig,
};

type BoxError = Box<dyn std::error::Error>;

#[derive(Parser)]
#[command(
    name = "pcga",
    version,
    about = "Manager-worker compact genetic algorithm"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a grid of simulated experiments and write a CSV
    Sweep(SweepArgs),
    /// Fit log(metric) against log(P) for one sync interval
    Analyze(AnalyzeArgs),
    /// Serve the authoritative model over TCP
    Manager(ManagerArgs),
    /// Run a worker against a manager
    Worker(WorkerArgs),
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    parallel: Option<usize>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    include_unsolved: bool,
}

#[derive(Args)]
struct ManagerArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    bind: Option<String>,
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    pop_size: Option<u64>,
    #[arg(long)]
    selection: Option<usize>,
    #[arg(long)]
    benchmark: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_evaluations: Option<u64>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Seconds between checkpoints
    #[arg(long)]
    checkpoint_every: Option<f64>,
}

#[derive(Args)]
struct WorkerArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    manager: Option<String>,
    #[arg(long)]
    sync_interval: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    selection: Option<usize>,
    #[arg(long)]
    benchmark: Option<String>,
    #[arg(long)]
    length: Option<usize>,
}

/// Environment, then the config file, then flags.
fn layered(
    config: Option<&PathBuf>,
    flags: &[(&str, Option<String>)],
) -> Result<Settings, BoxError> {
    let mut settings = Settings::from_env();
    if let Some(path) = config {
        settings = settings.overlay(load_config(path)?);
    }
    let mut cli = Settings::new();
    for (key, value) in flags {
        if let Some(value) = value {
            cli.set_cli(key, value)?;
        }
    }
    Ok(settings.overlay(cli))
}

fn flag<T: ToString>(key: &'static str, value: &Option<T>) -> (&'static str, Option<String>) {
    (key, value.as_ref().map(ToString::to_string))
}

fn with_default(settings: &mut Settings, key: &str, value: &str) -> Result<(), BoxError> {
    if !settings.contains(key) {
        settings.set_cli(key, value)?;
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<(), BoxError> {
    let settings = layered(
        args.config.as_ref(),
        &[
            flag("out", &args.out.as_ref().map(|p| p.display())),
            flag("parallel", &args.parallel),
        ],
    )?;
    let spec = settings.sweep_spec()?;
    let rows = run_sweep(&spec)?;
    if spec.output.is_none() {
        pcga::harness::write_csv(std::io::stdout().lock(), &rows)?;
    } else {
        eprintln!("wrote {} rows", rows.len());
    }
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> Result<(), BoxError> {
    let mut settings = layered(
        args.config.as_ref(),
        &[
            flag("csv", &args.csv.as_ref().map(|p| p.display())),
            flag("m", &args.m),
            (
                "include_unsolved",
                args.include_unsolved.then(|| "true".to_string()),
            ),
        ],
    )?;
    with_default(&mut settings, "include_unsolved", "false")?;
    settings.missing(&["csv", "m"])?;
    let rows = read_csv_file(&settings.require::<PathBuf>("csv")?)?;
    let m: u64 = settings.require("m")?;
    let include = settings.get_bool("include_unsolved")?.unwrap_or(false);
    let fit = fit_loglog_slope(&rows, m, Metric::EvaluationsPerProcessor, include)?;
    println!(
        "slope={} intercept={} r2={} points={}",
        fit.slope, fit.intercept, fit.r_squared, fit.points
    );
    // comm steps are zero at P=1 for very large m, so this fit is optional
    match fit_loglog_slope(&rows, m, Metric::CommunicationSteps, include) {
        Ok(c) => println!(
            "comm_slope={} comm_intercept={} comm_r2={}",
            c.slope, c.intercept, c.r_squared
        ),
        Err(e) => println!("comm_fit=unavailable ({e})"),
    }
    Ok(())
}

fn manager(args: ManagerArgs) -> Result<(), BoxError> {
    let mut settings = layered(
        args.config.as_ref(),
        &[
            flag("bind", &args.bind),
            flag("length", &args.length),
            flag("pop_size", &args.pop_size),
            flag("selection", &args.selection),
            flag("benchmark", &args.benchmark),
            flag("seed", &args.seed),
            flag("max_evaluations", &args.max_evaluations),
            flag("checkpoint", &args.checkpoint.as_ref().map(|p| p.display())),
            flag("checkpoint_every", &args.checkpoint_every),
        ],
    )?;
    with_default(&mut settings, "benchmark", "trap3x10")?;
    settings.missing(&["bind", "pop_size", "selection"])?;
    let params = settings.cga_params()?;
    let benchmark = settings.benchmark()?;
    let length = settings
        .get::<usize>("length")?
        .unwrap_or(benchmark.length());
    if length != benchmark.length() {
        return Err(format!(
            "--length {length} does not match benchmark {benchmark} ({} genes)",
            benchmark.length()
        )
        .into());
    }
    let mut config = ManagerConfig::new(
        params,
        length,
        TerminationPolicy {
            known_optimum: benchmark.known_optimum(),
            max_total_evaluations: settings.get("max_evaluations")?,
        },
    );
    if let Some(path) = settings.get::<PathBuf>("checkpoint")? {
        config.checkpoint = Some(CheckpointPolicy {
            path,
            every: settings
                .get_duration_secs("checkpoint_every")?
                .unwrap_or(std::time::Duration::from_secs(60)),
        });
    }
    let bind: String = settings.require("bind")?;
    let manager = Manager::bind(bind.as_str(), config)?;
    let report = manager.serve()?;
    println!(
        "status={:?} merges={} clamps={} evaluations={} best={} connections={}",
        report.status,
        report.merges_applied,
        report.clamp_events,
        report.total_evaluations,
        report.best_fitness_reported,
        report.connections
    );
    Ok(())
}

fn worker(args: WorkerArgs) -> Result<(), BoxError> {
    let mut settings = layered(
        args.config.as_ref(),
        &[
            flag("manager", &args.manager),
            flag("sync_interval", &args.sync_interval),
            flag("seed", &args.seed),
            flag("selection", &args.selection),
            flag("benchmark", &args.benchmark),
            flag("length", &args.length),
        ],
    )?;
    with_default(&mut settings, "benchmark", "trap3x10")?;
    with_default(&mut settings, "selection", "8")?;
    settings.missing(&["manager", "sync_interval", "seed"])?;
    let m: u64 = settings.require("sync_interval")?;
    if m == 0 {
        return Err("sync_interval must be at least 1".into());
    }
    let selection: usize = settings.require("selection")?;
    if selection < 2 {
        return Err("selection must be at least 2".into());
    }
    let mut config = WorkerConfig::new(
        settings.require::<String>("manager")?,
        m,
        settings.benchmark()?,
        settings.require("seed")?,
    );
    config.selection_rate = selection;
    let report = worker_run(&config)?;
    println!(
        "terminated={:?} evaluations={} transactions={} reconnects={} best={}",
        report.terminated_by,
        report.evaluations,
        report.transactions,
        report.reconnects,
        report.best_fitness
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Analyze(a) => analyze(a),
        Command::Manager(a) => manager(a),
        Command::Worker(a) => worker(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pcga: {e}");
            ExitCode::FAILURE
        }
    }
}
