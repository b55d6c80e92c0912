//! Command-line harness for the two-sided ISP/CP market solvers:
//! single equilibrium runs, side-payment bargaining, parameter sweeps
//! with CSV output, and runtime verification suites.

mod config;
mod run;
mod verify;

use clap::{Args, Parser, Subcommand};
use config::{parse_config, ModelKind, ScenarioConfig};
use run::{emit_csv, run_scenario};
use sidemarket::SolveConfig;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "sidemarket",
    version,
    about = "Two-sided ISP/CP market equilibria, side-payment bargaining and parameter sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the subscription-model price competition for one config
    SubscriptionNe(RunArgs),
    /// Solve the advertisement-model best response for one config
    AdNe(RunArgs),
    /// Negotiate the side payment per the config's bargain settings
    Bargain(RunArgs),
    /// Run the parameter sweep configured by the sweep_* keys
    Sweep(RunArgs),
    /// Run a named verification suite and report pass/fail per check
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario config file (flat key=value lines)
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; defaults to the config's `out` key, else stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweep evaluation
    #[arg(long)]
    workers: Option<usize>,
    /// Absolute solver tolerance
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name (one of the named suites, or `all`)
    suite: String,
    /// Absolute solver tolerance
    #[arg(long)]
    tol: Option<f64>,
}

fn solver_config(tol: Option<f64>) -> SolveConfig {
    match tol {
        Some(abs_tol) => SolveConfig::with_tol(abs_tol),
        None => SolveConfig::default(),
    }
}

fn load_config(path: &PathBuf) -> Result<ScenarioConfig, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_rows(rows: &[run::SweepRow], dest: Option<&PathBuf>) -> Result<(), String> {
    match dest {
        Some(path) => {
            let mut buf = Vec::new();
            emit_csv(rows, &mut buf).map_err(|e| e.to_string())?;
            fs::write(path, buf).map_err(|e| format!("cannot write {}: {e}", path.display()))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            emit_csv(rows, &mut lock).map_err(|e| e.to_string())
        }
    }
}

/// Shared driver for the run-style subcommands. `single` strips any sweep
/// so the command solves exactly one point.
fn execute_run(args: &RunArgs, expected: Option<ModelKind>, single: bool, bargain: bool) -> Result<(), String> {
    let mut cfg = load_config(&args.config)?;
    if let Some(model) = expected {
        if cfg.model != model {
            return Err(format!(
                "{}: config declares a different model for this subcommand",
                args.config.display()
            ));
        }
    }
    if bargain && cfg.bargain.is_none() {
        return Err(format!(
            "{}: bargain_gamma and bargain_timing are required for `bargain`",
            args.config.display()
        ));
    }
    if !bargain && single {
        // Equilibrium-only commands solve at the configured p_t.
        cfg.bargain = None;
    }
    if single {
        cfg.sweep = None;
    } else if cfg.sweep.is_none() {
        return Err(format!(
            "{}: sweep_var/sweep_start/sweep_stop/sweep_steps are required for `sweep`",
            args.config.display()
        ));
    }

    let workers = args.workers.unwrap_or_else(|| {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    });
    let solver = solver_config(args.tol);
    let rows = run_scenario(&cfg, workers, &solver);
    if single {
        if let Err(message) = &rows[0].result {
            return Err(format!("solver error: {message}"));
        }
    }
    let out = args.out.clone().or_else(|| cfg.out.clone());
    write_rows(&rows, out.as_ref())
}

fn execute_verify(args: &VerifyArgs) -> ExitCode {
    let cfg = solver_config(args.tol);
    match verify::run_suite(&args.suite, &cfg) {
        Ok(checks) => {
            let mut failed = 0usize;
            for check in &checks {
                let tag = if check.pass { "[PASS]" } else { "[FAIL]" };
                println!("{tag} {}: {}", check.name, check.detail);
                if !check.pass {
                    failed += 1;
                }
            }
            println!(
                "verify {}: {} checks, {} failed",
                args.suite,
                checks.len(),
                failed
            );
            if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::SubscriptionNe(args) => {
            execute_run(args, Some(ModelKind::Subscription), true, false)
        }
        Command::AdNe(args) => execute_run(args, Some(ModelKind::Advertisement), true, false),
        Command::Bargain(args) => execute_run(args, None, true, true),
        Command::Sweep(args) => execute_run(args, None, false, false),
        Command::Verify(args) => return execute_verify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
