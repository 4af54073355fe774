use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use treig::config::ExperimentConfig;
use treig::pipeline::{self, in_pool, RunError};
use treig_core::beyn::count_by_argument_principle;
use treig_core::selftest::{self, CheckResult, BESSEL_TABLE};

/// Eigenvalue trajectories of transmission problems.
#[derive(Parser)]
#[command(name = "treig", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenpairs inside the contour at one parameter value.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        p: f64,
        /// Write eigenpairs.csv here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Track eigenvalues over the parameter range and analyze the events.
    Track {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory, overriding the configured one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bessel identities, toy fixtures and a contour-solver oracle.
    Selftest {
        /// Real-axis reference table to check against.
        #[arg(long)]
        fixture: Option<PathBuf>,
    },
}

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

fn load(path: &PathBuf) -> Result<ExperimentConfig, RunError> {
    Ok(ExperimentConfig::load(path)?.with_env_seed()?)
}

fn report(e: RunError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn run_solve(config: &PathBuf, p: f64, out: Option<PathBuf>) -> ExitCode {
    let pairs = match load(config).and_then(|cfg| pipeline::solve(&cfg, p)) {
        Ok(v) => v,
        Err(e) => return report(e),
    };
    let csv = pipeline::eigenpairs_csv(&pairs);
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, csv) {
                return report(e.into());
            }
        }
        None => print!("{csv}"),
    }
    ExitCode::SUCCESS
}

fn run_track(config: &PathBuf, threads: Option<usize>, out: Option<PathBuf>) -> ExitCode {
    let cfg = match load(config) {
        Ok(c) => c,
        Err(e) => return report(e),
    };
    let dir = out.unwrap_or_else(|| PathBuf::from(&cfg.outputs.directory));
    let run = match in_pool(threads, || pipeline::track(&cfg)) {
        Ok(r) => r,
        Err(e) => return report(e),
    };
    if let Err(e) = pipeline::write_track(&run, &dir) {
        return report(e);
    }
    let bif = run.events.iter().filter(|e| e.is_bifurcation()).count();
    println!(
        "{} trajectories, {} events ({bif} bifurcations), {} samples -> {}",
        run.set.trajectories.len(),
        run.events.len(),
        run.set.samples.len(),
        dir.display()
    );
    if run.partial() {
        for (a, b) in run.unresolved() {
            eprintln!("unresolved interval [{a}, {b}]");
        }
        if run.set.budget_exhausted {
            eprintln!("sample budget exhausted");
        }
        return ExitCode::from(EXIT_PARTIAL);
    }
    ExitCode::SUCCESS
}

/// Disk preset at `p = 8`: the solver count must match the argument
/// principle and every residual must stay below `1e-7`.
fn solver_oracle() -> CheckResult {
    let name = "solver-oracle".to_string();
    let run = || -> Result<String, String> {
        let cfg = ExperimentConfig::parse(treig::DISK_PRESET).map_err(|e| e.to_string())?;
        let tracker = cfg.tracker().map_err(|e| e.to_string())?;
        let pairs = pipeline::solve(&cfg, 8.0).map_err(|e| e.to_string())?;
        let count: usize = pairs.iter().map(|e| e.multiplicity).sum();
        let winding = count_by_argument_principle(&tracker.nep, 8.0, &tracker.contour).map_err(|e| e.to_string())?;
        let worst = pairs.iter().map(|e| e.residual).fold(0.0, f64::max);
        let detail = format!("{count} eigenvalues, winding {winding}, max residual {worst:.2e}");
        if count == winding && worst <= 1e-7 {
            Ok(detail)
        } else {
            Err(detail)
        }
    };
    match run() {
        Ok(detail) => CheckResult { name, passed: true, detail },
        Err(detail) => CheckResult { name, passed: false, detail },
    }
}

fn run_selftest(fixture: Option<PathBuf>) -> ExitCode {
    let table = match fixture {
        Some(path) => match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: reading {}: {e}", path.display());
                return ExitCode::from(EXIT_CONFIG);
            }
        },
        None => BESSEL_TABLE.to_string(),
    };
    let mut checks = selftest::bessel_checks(&table);
    checks.extend(selftest::toy_checks());
    checks.push(solver_oracle());
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &checks {
        println!("{:<width$}  {}  {}", c.name, if c.passed { "pass" } else { "FAIL" }, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {failed} failed", checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Solve { config, p, out } => run_solve(&config, p, out),
        Command::Track { config, threads, out } => run_track(&config, threads, out),
        Command::Selftest { fixture } => run_selftest(fixture),
    }
}
