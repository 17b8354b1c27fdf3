//! `lions-kit`: solve evolution problems with contraction-coupled time
//! boundary conditions, run the randomized verification suites, and produce
//! convergence tables.
//!
//! Exit codes: 0 success, 2 configuration error, 3 invariant violation.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use lions_core::evolution::{convergence_study, discretize, sdp_embedding, solve_all_at_once};
use lions_core::tol::Tolerances;
use lions_core::verify::{run_suites, SuiteSelection};

use config::{Mode, RunConfig};
use output::SolveDiagnostics;

#[derive(Parser)]
#[command(
    name = "lions-kit",
    about = "Evolution problems u' + A(t)u = f with boundary coupling u(0) - Phi* u(T) = y0",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem and write trajectory.csv plus
    /// diagnostics.json.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the randomized verification suites.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        /// rtl | derivation | evolution | all
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a grid-refinement study on a manufactured problem and write
    /// convergence.csv.
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Config(String),
    Invariant(String),
}

impl Failure {
    fn report_and_code(self) -> ExitCode {
        let (kind, message, code) = match self {
            Failure::Config(m) => ("config", m, 2),
            Failure::Invariant(m) => ("invariant", m, 3),
        };
        eprintln!(
            "{}",
            json!({ "error": { "kind": kind, "message": message } })
        );
        ExitCode::from(code)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve { config, out } => run_solve(&config, out.as_deref()),
        Command::Verify {
            config,
            suite,
            seed,
            out,
        } => run_verify(config.as_deref(), suite, seed, out.as_deref()),
        Command::Converge { config, out } => run_converge(&config, out.as_deref()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => failure.report_and_code(),
    }
}

fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        Failure::Config(format!(
            "{}:{}:{}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

fn check_mode(config: &RunConfig, expected: Mode) -> Result<(), Failure> {
    if let Some(mode) = config.mode {
        if mode != expected {
            return Err(Failure::Config(format!(
                "config declares mode '{mode}' but the '{expected}' subcommand was invoked"
            )));
        }
    }
    Ok(())
}

fn output_dir(config: &RunConfig, flag: Option<&Path>) -> Result<PathBuf, Failure> {
    let dir = flag
        .map(Path::to_path_buf)
        .or_else(|| config.output.as_ref().map(|o| PathBuf::from(&o.dir)))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn run_solve(config_path: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let config = load_config(config_path)?;
    check_mode(&config, Mode::Solve)?;
    let problem_config = config
        .problem
        .as_ref()
        .ok_or_else(|| Failure::Config("solve needs a 'problem' section".into()))?;
    let disc_config = config
        .discretization
        .as_ref()
        .ok_or_else(|| Failure::Config("solve needs a 'discretization' section".into()))?;
    let problem = problem_config.build().map_err(Failure::Config)?;
    let dir = output_dir(&config, out)?;

    let started = Instant::now();
    let solution = solve_all_at_once(&problem, disc_config.steps, disc_config.theta)
        .map_err(|e| Failure::Invariant(e.to_string()))?;

    // graph-norm stability constant of the midpoint-consistent assembly
    let stability = discretize(&problem, disc_config.steps.max(2))
        .and_then(|disc| {
            let emb = sdp_embedding(&problem, &disc, 0.5)?;
            disc.instance.stability_constant(&emb.a_op, &emb.cbc)
        })
        .map_err(|e| Failure::Invariant(e.to_string()))?;
    let wall = started.elapsed().as_secs_f64();

    if solution.diagnostics.boundary_residual > lions_core::tol::BOUNDARY_RESIDUAL {
        return Err(Failure::Invariant(format!(
            "boundary residual {:.3e} exceeds the solver postcondition",
            solution.diagnostics.boundary_residual
        )));
    }

    output::write_trajectory(&dir.join("trajectory.csv"), &solution)
        .map_err(|e| Failure::Config(format!("writing trajectory: {e}")))?;
    let diagnostics = SolveDiagnostics {
        n: problem.n(),
        steps: disc_config.steps,
        theta: disc_config.theta,
        boundary_residual: solution.diagnostics.boundary_residual,
        stepping_residual: solution.diagnostics.stepping_residual,
        w_norm: solution.diagnostics.w_norm,
        propagator_norm: solution.diagnostics.propagator_norm,
        stability_constant: stability,
        wall_time_s: wall,
    };
    output::write_json(&dir.join("diagnostics.json"), &diagnostics)
        .map_err(|e| Failure::Config(format!("writing diagnostics: {e}")))?;
    println!(
        "solved {} steps (theta = {}): boundary residual {:.3e}, |S|_H = {:.6}, beta' = {:.6}",
        disc_config.steps,
        disc_config.theta,
        diagnostics.boundary_residual,
        diagnostics.propagator_norm,
        diagnostics.stability_constant
    );
    Ok(())
}

fn run_verify(
    config_path: Option<&Path>,
    suite_flag: Option<String>,
    seed_flag: Option<u64>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let config = match config_path {
        Some(path) => {
            let c = load_config(path)?;
            check_mode(&c, Mode::Verify)?;
            c
        }
        None => RunConfig {
            mode: None,
            problem: None,
            discretization: None,
            verify: None,
            converge: None,
            seed: None,
            output: None,
        },
    };
    let verify = config.verify.clone().unwrap_or(config::VerifyConfig {
        suite: None,
        seed: None,
        tolerance_scale: None,
    });
    let suite_name = suite_flag
        .or(verify.suite)
        .unwrap_or_else(|| "all".to_string());
    let selection: SuiteSelection = suite_name.parse().map_err(Failure::Config)?;
    let seed = seed_flag.or(verify.seed).or(config.seed).unwrap_or(7);
    let tols = match verify.tolerance_scale {
        Some(scale) => Tolerances::default().scaled(scale),
        None => Tolerances::default(),
    };

    let started = Instant::now();
    let reports = run_suites(selection, seed, &tols);
    let wall = started.elapsed().as_secs_f64();

    let mut all_pass = true;
    for report in &reports {
        for check in &report.checks {
            println!(
                "{} {}::{} cases={} worst={:.3e} ({})",
                if check.pass { "PASS" } else { "FAIL" },
                report.suite,
                check.name,
                check.cases,
                check.worst,
                check.detail
            );
            all_pass &= check.pass;
        }
    }
    println!(
        "suites: {} (seed {seed}, {wall:.2} s)",
        if all_pass { "pass" } else { "FAIL" }
    );

    if let Some(dir) = out {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))?;
        output::write_json(&dir.join("verify_report.json"), &reports)
            .map_err(|e| Failure::Config(format!("writing report: {e}")))?;
    }
    if all_pass {
        Ok(())
    } else {
        Err(Failure::Invariant(
            "verification suites reported failures".into(),
        ))
    }
}

fn run_converge(config_path: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let config = load_config(config_path)?;
    check_mode(&config, Mode::Converge)?;
    let problem_config = config
        .problem
        .as_ref()
        .ok_or_else(|| Failure::Config("converge needs a 'problem' section".into()))?;
    let converge = config
        .converge
        .as_ref()
        .ok_or_else(|| Failure::Config("converge needs a 'converge' section".into()))?;
    let problem = problem_config.build().map_err(Failure::Config)?;
    if !problem.is_manufactured() {
        return Err(Failure::Config(
            "convergence studies need a manufactured source preset".into(),
        ));
    }
    let dir = output_dir(&config, out)?;
    let table = convergence_study(&problem, &converge.steps, &converge.thetas)
        .map_err(|e| Failure::Invariant(e.to_string()))?;
    output::write_convergence(&dir.join("convergence.csv"), &table)
        .map_err(|e| Failure::Config(format!("writing table: {e}")))?;
    for row in &table.rows {
        println!(
            "N = {:4}  theta = {:3}  error = {:.6e}  order = {}",
            row.steps,
            row.theta,
            row.error,
            row.order.map_or("na".to_string(), |o| format!("{o:.3}"))
        );
    }
    Ok(())
}
