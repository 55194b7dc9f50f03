//! CLI entry: `solve`, `suite`, and `check` subcommands.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use proxkl_core::{
    check_descent_certificate, check_subgrad_bound, estimate_q_factor, estimate_r_factor,
    fit_kl_model, solve, IterationRecord, RateReport, SolveReport, SolveStatus, SolverConfig,
};

use crate::config::{load_config, ProblemSpec};
use crate::registry::{self, BuiltProblem};
use crate::trace_io::{
    read_report_json, read_trace_csv, write_report_json, write_trace_csv, RunArtifact,
};

const RATE_TAIL_WINDOW: usize = 30;
/// Iterates excluded from rate windows when the optimum is proxied by the
/// end of the same run.
const PROXY_EXCLUDE: usize = 5;

#[derive(Parser)]
#[command(name = "proxkl", about = "Backtracking proximal gradient solver and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one problem from a config file, writing trace.csv and report.json.
    Solve(SolveArgs),
    /// Run the whole built-in suite and write a summary table.
    Suite(SuiteArgs),
    /// Re-validate a stored trace: descent margin and rate estimates.
    Check(CheckArgs),
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "runs")]
    out_dir: PathBuf,
    /// Override the termination tolerance from the config.
    #[arg(long)]
    eps: Option<f64>,
    /// Override the iteration budget from the config.
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long, default_value = "runs")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    report: PathBuf,
}

pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders help/usage itself; 2 for usage errors, 0 for -h/-V.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Solve(args) => cmd_solve(&args),
        Command::Suite(args) => cmd_suite(&args),
        Command::Check(args) => cmd_check(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn apply_overrides(cfg: &mut SolverConfig, eps: Option<f64>, max_iter: Option<usize>) {
    if let Some(eps) = eps {
        cfg.eps_tol = eps;
    }
    if let Some(mi) = max_iter {
        cfg.max_iter = mi;
    }
}

/// Rate estimates from a finished run, with the run's own tail as the
/// optimum proxy.
fn rate_report(report: &SolveReport) -> Option<RateReport> {
    let trace = &report.trace;
    if trace.len() < RATE_TAIL_WINDOW + PROXY_EXCLUDE + 3 {
        return None;
    }
    let psi_star = report.final_psi;
    let x_star = &report.final_x;
    let cut = trace.len() - PROXY_EXCLUDE;
    let psi: Vec<f64> = trace[..cut].iter().map(|r| r.psi).collect();
    let q = estimate_q_factor(&psi, psi_star, RATE_TAIL_WINDOW).ok()?;
    let errors = iterate_errors(trace, x_star);
    let r = estimate_r_factor(&errors, RATE_TAIL_WINDOW).ok()?;
    Some(RateReport {
        q_factor_psi: q,
        r_factor_x: r,
        tail_window: RATE_TAIL_WINDOW,
        psi_star_proxy: psi_star,
        x_star_proxy: x_star.clone(),
    })
}

fn run_problem(problem: &ProblemSpec, cfg: &SolverConfig) -> Result<RunArtifact> {
    let BuiltProblem { smooth, nonsmooth, x0 } = registry::build(problem)?;
    let report = solve(smooth.as_ref(), &nonsmooth, &x0, cfg);
    let rate = rate_report(&report);
    let kl_model = {
        let psi: Vec<f64> = report.trace.iter().map(|r| r.psi).collect();
        let res: Vec<f64> = report.trace.iter().map(|r| r.residual).collect();
        // Pair the gap at x^{k+1} with the residual recorded at x^{k+1}.
        let gaps: Vec<f64> = psi.iter().skip(1).copied().chain([report.final_psi]).collect();
        fit_kl_model(&gaps, &res, report.final_psi).ok()
    };
    Ok(RunArtifact {
        report,
        rate,
        kl_model,
        config_echo: cfg.clone(),
        problem_echo: problem.clone(),
    })
}

fn write_artifact(artifact: &RunArtifact, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_trace_csv(&artifact.report.trace, &dir.join("trace.csv"))?;
    write_report_json(artifact, &dir.join("report.json"))?;
    Ok(())
}

fn status_code(status: SolveStatus) -> i32 {
    if status.is_error() {
        1
    } else {
        0
    }
}

fn cmd_solve(args: &SolveArgs) -> Result<i32> {
    let (problem, mut cfg) = load_config(&args.config)?;
    apply_overrides(&mut cfg, args.eps, args.max_iter);
    let artifact = run_problem(&problem, &cfg)?;
    write_artifact(&artifact, &args.out_dir)?;
    let rep = &artifact.report;
    println!(
        "{}: {:?} in {} iterations, psi = {:.12e}, wall = {:.3}s",
        problem.name,
        rep.status,
        rep.trace.len(),
        rep.final_psi,
        rep.wall_time
    );
    Ok(status_code(rep.status))
}

fn cmd_suite(args: &SuiteArgs) -> Result<i32> {
    let cfg = SolverConfig::default();
    let mut rows = Vec::new();
    let mut worst = 0;
    for name in registry::suite_names() {
        let problem = registry::lookup(name).expect("suite names resolve");
        let artifact = run_problem(&problem, &cfg)?;
        write_artifact(&artifact, &args.out_dir.join(name))?;
        let rep = &artifact.report;
        let (q, r) = artifact
            .rate
            .as_ref()
            .map_or((f64::NAN, f64::NAN), |rr| (rr.q_factor_psi, rr.r_factor_x));
        rows.push(format!(
            "{},{:?},{},{},{},{},{}",
            name,
            rep.status,
            rep.trace.len(),
            rep.final_psi,
            rep.trace.last().map_or(f64::NAN, |t| t.residual),
            q,
            r
        ));
        worst = worst.max(status_code(rep.status));
    }
    let summary = format!(
        "name,status,iterations,final_psi,final_residual,q_factor,r_factor\n{}\n",
        rows.join("\n")
    );
    std::fs::create_dir_all(&args.out_dir)?;
    std::fs::write(args.out_dir.join("summary.csv"), &summary)?;
    print!("{summary}");
    Ok(worst)
}

fn cmd_check(args: &CheckArgs) -> Result<i32> {
    let trace = read_trace_csv(&args.trace)?;
    let artifact = read_report_json(&args.report)?;
    let cfg = &artifact.config_echo;

    let margin = check_descent_certificate(&trace, cfg.delta);
    println!("descent margin: {margin:e}");

    let psi_star = artifact.report.final_psi;
    let cut = trace.len().saturating_sub(PROXY_EXCLUDE);
    let psi: Vec<f64> = trace[..cut].iter().map(|r| r.psi).collect();
    match estimate_q_factor(&psi, psi_star, RATE_TAIL_WINDOW) {
        Ok(q) => println!("q_factor(psi): {q}"),
        Err(e) => println!("q_factor(psi): unavailable ({e})"),
    }
    // Iterate errors come from the stored report, which keeps snapshots.
    let errors = iterate_errors(&artifact.report.trace, &artifact.report.final_x);
    match estimate_r_factor(&errors, RATE_TAIL_WINDOW) {
        Ok(r) => println!("r_factor(x): {r}"),
        Err(e) => println!("r_factor(x): unavailable ({e})"),
    }

    // Subgradient-distance bound when the problem can be rebuilt and the
    // nonsmooth term has a closed-form subdifferential distance.
    if let Ok(built) = registry::build(&artifact.problem_echo) {
        let l_est = built.smooth.lipschitz_hint().unwrap_or(0.0);
        match check_subgrad_bound(&artifact.report.trace, built.smooth.as_ref(), &built.nonsmooth, l_est)
        {
            Ok(ratio) => println!("subgradient bound ratio (L_est = {l_est}): {ratio}"),
            Err(e) => println!("subgradient bound: unavailable ({e})"),
        }
    }

    let negative_margin = margin < -1e-10 * (1.0 + trace.first().map_or(0.0, |r| r.psi.abs()));
    Ok(if negative_margin { 1 } else { 0 })
}

/// Distances to `x_star` over the trailing stretch of consecutively
/// snapshotted iterates, excluding the proxy tail. Earlier sparse snapshots
/// are ignored so ratios always reflect single-iteration progress.
fn iterate_errors(trace: &[IterationRecord], x_star: &[f64]) -> Vec<f64> {
    let snaps: Vec<(usize, &Vec<f64>)> = trace
        .iter()
        .filter_map(|r| r.x_snapshot.as_ref().map(|x| (r.k, x)))
        .collect();
    let mut start = snaps.len().saturating_sub(1);
    while start > 0 && snaps[start - 1].0 + 1 == snaps[start].0 {
        start -= 1;
    }
    let mut errors: Vec<f64> = snaps[start..]
        .iter()
        .map(|(_, x)| proxkl_core::linalg::dist(x, x_star))
        .collect();
    errors.truncate(errors.len().saturating_sub(PROXY_EXCLUDE));
    errors
}
