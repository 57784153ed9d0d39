use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use log::{info, warn};
use ringtumble_core::collocation::{initial_guess, solve_steering, verify_steering, SteeringProblem};
use ringtumble_core::scenario::{
    emit_inertia_table, emit_outputs, emit_steering, emit_sweep, run_scenario, run_sweep, seed_check,
    ScenarioConfig, SweepSpec,
};
use ringtumble_core::{Error, Execution};

/// Simulate and steer a shape-changing ring tumbling down an incline.
#[derive(Debug, Parser)]
#[command(name = "ringtumble", version)]
struct Cli {
    /// TOML configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV, SVG and manifest output.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Run the invariant suite before the command.
    #[arg(long, global = true)]
    seed_check: bool,
    /// Run sweeps and finite differences on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one scenario.
    Simulate,
    /// Run an impulse amplitude by sharpness grid.
    Sweep,
    /// Solve the collocation steering problem and re-simulate the result.
    Steer,
    /// Tabulate inertia against the semi-axis `b`.
    InertiaTable {
        #[arg(long, default_value_t = 41)]
        rows: usize,
    },
}

/// Marks errors that should exit with the configuration status.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// A command finished but its result did not meet the success criteria.
#[derive(Debug)]
struct RunFailure(String);

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for RunFailure {}

fn read_config<T>(path: Option<&Path>, parse: impl FnOnce(&str) -> ringtumble_core::Result<T>) -> Result<Option<T>> {
    let Some(path) = path else { return Ok(None) };
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("configuration error: {}: {e}", path.display())))?;
    parse(&text)
        .map(Some)
        .map_err(|e| ConfigError(format!("{}: {e}", path.display())).into())
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

fn print_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn simulate(cli: &Cli) -> Result<()> {
    let cfg = read_config(cli.config.as_deref(), ScenarioConfig::from_toml_str)?.unwrap_or_default();
    let run = run_scenario(&cfg).context("simulation failed")?;
    let s = &run.summary;
    println!(
        "terminal heading {:.6} rad, lateral deviation {:.6} m, energy drift {:.3e}, perimeter error {:.3e}",
        s.terminal_heading, s.lateral_deviation, s.max_energy_drift, s.max_perimeter_error
    );
    print_files(&emit_outputs(&run, &cfg, &cli.out_dir)?);
    Ok(())
}

fn sweep(cli: &Cli) -> Result<()> {
    let spec = read_config(cli.config.as_deref(), SweepSpec::from_toml_str)?.unwrap_or_default();
    let report = run_sweep(&spec, execution(cli.sequential)).context("sweep failed")?;
    for row in &report.rows {
        match (&row.lateral_deviation, &row.error) {
            (Some(d), _) => println!("b' {:<6} gamma {:<6} lateral deviation {d:+.6} m", row.amplitude, row.sharpness),
            (None, Some(e)) => println!("b' {:<6} gamma {:<6} failed: {e}", row.amplitude, row.sharpness),
            (None, None) => {}
        }
    }
    print_files(&emit_sweep(&report, &spec, &cli.out_dir)?);
    let failed = report.failures();
    if failed > 0 {
        return Err(RunFailure(format!("{failed} of {} sweep runs failed", report.rows.len())).into());
    }
    Ok(())
}

fn steer(cli: &Cli) -> Result<()> {
    let mut problem = read_config(cli.config.as_deref(), SteeringProblem::from_toml_str)?.unwrap_or_default();
    if cli.sequential {
        problem.nlp.execution = Execution::Sequential;
    }
    let guess = initial_guess(&problem).context("initial guess failed")?;
    let solution = solve_steering(&problem, &guess).context("steering solve failed")?;
    let r = &solution.report;
    println!(
        "{:?} after {} iterations: cost {:.3e}, violation {:.3e}, stationarity {:.3e}",
        r.status, r.iterations, solution.cost, r.max_violation, r.stationarity
    );
    let check = match verify_steering(&problem, &solution.decision) {
        Ok(v) => {
            println!(
                "re-simulated terminal heading {:.6} rad (target {:.6})",
                v.terminal_heading, problem.target_heading
            );
            Some(v)
        }
        Err(e) => {
            warn!("re-simulation failed: {e}");
            None
        }
    };
    print_files(&emit_steering(&problem, &solution, check.as_ref(), &cli.out_dir)?);
    if !solution.converged() {
        return Err(RunFailure(format!("solver stopped with {:?}", r.status)).into());
    }
    if check.is_none() {
        return Err(RunFailure("solution could not be re-simulated".into()).into());
    }
    Ok(())
}

fn inertia(cli: &Cli, rows: usize) -> Result<()> {
    let cfg = read_config(cli.config.as_deref(), ScenarioConfig::from_toml_str)?.unwrap_or_default();
    print_files(&emit_inertia_table(&cfg.ring, rows, &cli.out_dir)?);
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if cli.seed_check {
        let outcomes = seed_check().context("invariant suite failed to run")?;
        for c in &outcomes {
            println!(
                "check {:<24} {} ({:.3e} < {:.0e})",
                c.name,
                if c.passed { "pass" } else { "FAIL" },
                c.value,
                c.tolerance
            );
        }
        let failed = outcomes.iter().filter(|c| !c.passed).count();
        if failed > 0 {
            return Err(RunFailure(format!("{failed} invariant checks failed")).into());
        }
        info!("invariant suite passed");
    }
    match &cli.command {
        Command::Simulate => simulate(cli),
        Command::Sweep => sweep(cli),
        Command::Steer => steer(cli),
        Command::InertiaTable { rows } => inertia(cli, *rows),
    }
}

fn exit_status(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_status(&e))
        }
    }
}
