//! Command-line entry point: `solve`, `sweep`, `evaluate`, `ablate` and
//! `verify`.
//!
//! Exit codes: 0 success, 1 invalid input, 2 solver failure, 3 failed
//! verification. Failures print one JSON object on stderr.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::error::Error;
use crate::evalreport::{
    export_ablation, export_report, gamma_sweep, realized_imbalance_revenue, technology_ablation,
    SweepOptions, SweepReport,
};
use crate::formulation::{Formulation, Solved};
use crate::instance::{load_direction_sequences, load_instance, DirectionSequence, Instance};
use crate::model::{HighsBackend, LpFileBackend, MilpBackend, SolveOptions, SolveStatus};
use crate::oracle::{enumerate_tiny, lipschitz_constant, worst_case_profit, DEFAULT_GRID_STEP};
use crate::robust::verify_duality;
use crate::solution::Solution;

pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hybrid-bid", version, about = "Robust day-ahead bidding for a PV, battery and electrolyzer facility")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one budget and write solution.json and breakdown.json.
    Solve(SolveArgs),
    /// Solve a range of budgets and write the report CSVs.
    Sweep(SweepArgs),
    /// Settle a stored solution against realised direction sequences.
    Evaluate(EvaluateArgs),
    /// Sweep every technology configuration.
    Ablate(SweepArgs),
    /// Check duality, feasibility and, on micro-instances, optimality.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Wall-clock limit per solve, seconds.
    #[arg(long, default_value_t = 600.0)]
    pub time_limit: f64,
    /// Relative MIP gap.
    #[arg(long, default_value_t = 1e-6)]
    pub mip_gap: f64,
    /// `highs`, or `lp-file:<program>` for an external HiGHS-compatible binary.
    #[arg(long, default_value = "highs")]
    pub backend: String,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Budget; defaults to the one stored in the instance.
    #[arg(long)]
    pub gamma: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// `A..B` (inclusive) or a comma list; defaults to every budget.
    #[arg(long)]
    pub gammas: Option<String>,
    /// CSV of direction sequences for the ex-post columns.
    #[arg(long)]
    pub directions: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Solve budgets independently in parallel instead of chaining them.
    #[arg(long)]
    pub cold: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub solution: PathBuf,
    #[arg(long)]
    pub directions: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub gamma: Option<usize>,
    /// Stored solution to check; solves afresh when absent.
    #[arg(long)]
    pub solution: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Relative tolerance of the objective and duality checks.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    fn validation(e: impl ToString) -> Self {
        Self { code: EXIT_VALIDATION, kind: "validation", message: e.to_string() }
    }

    fn solver(e: impl ToString) -> Self {
        Self { code: EXIT_SOLVER, kind: "solver", message: e.to_string() }
    }

    fn verification(e: impl ToString) -> Self {
        Self { code: EXIT_VERIFICATION, kind: "verification", message: e.to_string() }
    }

    fn to_json(&self) -> String {
        json!({ "error": self.kind, "exit_code": self.code, "message": self.message }).to_string()
    }
}

/// Maps library errors raised while solving.
fn solve_error(e: Error) -> CliError {
    match e {
        Error::Parse { .. } | Error::Validation { .. } | Error::LengthMismatch { .. } => {
            CliError::validation(e)
        }
        Error::DualityGap { .. } | Error::Verification(_) | Error::IncompleteSolution(_) => {
            CliError::verification(e)
        }
        _ => CliError::solver(e),
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            if code == 0 {
                let _ = e.print();
            } else {
                eprintln!("{}", CliError::validation(e.to_string().trim_end()).to_json());
            }
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.code
        }
    }
}

pub fn execute(command: &Command) -> CliResult<()> {
    match command {
        Command::Solve(a) => solve(a),
        Command::Sweep(a) => sweep(a, false),
        Command::Ablate(a) => sweep(a, true),
        Command::Evaluate(a) => evaluate(a),
        Command::Verify(a) => verify(a),
    }
}

fn backend(spec: &str) -> CliResult<Box<dyn MilpBackend>> {
    match spec {
        "highs" => Ok(Box::new(HighsBackend::new())),
        _ => match spec.strip_prefix("lp-file:") {
            Some(program) if !program.is_empty() => Ok(Box::new(LpFileBackend::new(program))),
            _ => Err(CliError::validation(format!(
                "unknown backend `{spec}`; use `highs` or `lp-file:<program>`"
            ))),
        },
    }
}

fn solve_options(a: &SolverArgs) -> CliResult<SolveOptions> {
    if !(a.time_limit > 0.0) {
        return Err(CliError::validation("--time-limit must be positive"));
    }
    if !(0.0..1.0).contains(&a.mip_gap) {
        return Err(CliError::validation("--mip-gap must lie in [0, 1)"));
    }
    Ok(SolveOptions {
        mip_gap_tol: a.mip_gap,
        time_limit: a.time_limit,
        ..SolveOptions::default()
    })
}

fn instance_with(path: &Path, gamma: Option<usize>) -> CliResult<Instance> {
    let instance = load_instance(path).map_err(CliError::validation)?;
    match gamma {
        Some(g) => instance.with_gamma(g).map_err(CliError::validation),
        None => Ok(instance),
    }
}

fn directions(path: Option<&Path>, instance: &Instance) -> CliResult<Vec<DirectionSequence>> {
    match path {
        Some(p) => load_direction_sequences(p, instance.n_periods()).map_err(CliError::validation),
        None => Ok(Vec::new()),
    }
}

fn out_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::validation(Error::io(path, e)))
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("serialisable");
    fs::write(path, text + "\n").map_err(|e| CliError::solver(Error::io(path, e)))
}

/// Parses `A..B` (inclusive) or `a,b,c`.
pub fn parse_gammas(spec: &str, n_periods: usize) -> Result<Vec<usize>, String> {
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| format!("`{s}` is not a budget"))
    };
    let gammas = match spec.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (parse(a)?, parse(b)?);
            if a > b {
                return Err(format!("empty range {spec}"));
            }
            (a..=b).collect()
        }
        None => spec.split(',').map(parse).collect::<Result<Vec<_>, _>>()?,
    };
    if let Some(g) = gammas.iter().find(|&&g| g > n_periods) {
        return Err(format!("budget {g} exceeds the {n_periods} periods"));
    }
    Ok(gammas)
}

#[derive(Serialize)]
struct Breakdown {
    gamma: usize,
    status: SolveStatus,
    objective: f64,
    mip_gap: f64,
    da_revenue: f64,
    hydrogen_revenue_expected: f64,
    water_cost_expected: f64,
    imbalance_revenue_expected: f64,
    total: f64,
}

fn solve_and_check(instance: &Instance, backend: &dyn MilpBackend, options: &SolveOptions) -> CliResult<Solved> {
    let solved = Formulation::build(instance)
        .map_err(CliError::validation)?
        .solve(backend, options)
        .map_err(solve_error)?;
    match solved.result.status {
        SolveStatus::Optimal | SolveStatus::TimeLimit => Ok(solved),
        other => Err(CliError::solver(format!("solve ended {other}"))),
    }
}

fn solve(a: &SolveArgs) -> CliResult<()> {
    let instance = instance_with(&a.instance, a.gamma)?;
    let options = solve_options(&a.solver)?;
    let backend = backend(&a.solver.backend)?;
    out_dir(&a.out)?;
    let solved = solve_and_check(&instance, backend.as_ref(), &options)?;
    let profit = worst_case_profit(&solved.solution, &instance).map_err(CliError::verification)?;
    let breakdown = Breakdown {
        gamma: instance.imbalance.gamma,
        status: solved.result.status,
        objective: solved.result.objective_value,
        mip_gap: solved.result.mip_gap,
        da_revenue: profit.da_revenue,
        hydrogen_revenue_expected: profit.hydrogen_revenue_expected,
        water_cost_expected: profit.water_cost_expected,
        imbalance_revenue_expected: profit.imbalance_revenue_expected,
        total: profit.total,
    };
    solved
        .solution
        .save(a.out.join("solution.json"))
        .map_err(CliError::solver)?;
    write_json(&a.out.join("breakdown.json"), &breakdown)?;
    println!(
        "gamma {}: {} objective {:.2} EUR (gap {:.2e}) in {:.1} s",
        breakdown.gamma, breakdown.status, breakdown.objective, breakdown.mip_gap, solved.result.wall_time
    );
    Ok(())
}

fn sweep(a: &SweepArgs, ablate: bool) -> CliResult<()> {
    let instance = instance_with(&a.instance, None)?;
    let gammas = match &a.gammas {
        Some(spec) => parse_gammas(spec, instance.n_periods()).map_err(CliError::validation)?,
        None => (0..=instance.n_periods()).collect(),
    };
    let directions = directions(a.directions.as_deref(), &instance)?;
    let options = SweepOptions {
        solve: solve_options(&a.solver)?,
        warm_start: !a.cold,
        ..SweepOptions::default()
    };
    let backend = backend(&a.solver.backend)?;
    out_dir(&a.out)?;
    let reports: Vec<(String, SweepReport)> = if ablate {
        let report = technology_ablation(&instance, &gammas, &directions, backend.as_ref(), &options)
            .map_err(solve_error)?;
        export_ablation(&report, &a.out).map_err(CliError::solver)?;
        report
            .configurations
            .into_iter()
            .map(|(t, r)| (t.label().to_string(), r))
            .collect()
    } else {
        let report = gamma_sweep(&instance, &gammas, &directions, backend.as_ref(), &options)
            .map_err(solve_error)?;
        export_report(&report, &a.out).map_err(CliError::solver)?;
        vec![(String::new(), report)]
    };
    let mut failed = Vec::new();
    for (label, report) in &reports {
        for r in &report.rows {
            println!("{label:>10} gamma {:>2}: {:>12.2} EUR  {}", r.gamma, r.total_expected, r.status);
            if r.status.is_failed() {
                failed.push(format!("{label} gamma {}: {}", r.gamma, r.status));
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::solver(failed.join("; ")))
    }
}

#[derive(Serialize)]
struct Evaluation {
    gamma: usize,
    da_revenue: f64,
    hydrogen_expected: f64,
    imbalance_per_sequence: Vec<f64>,
    real_imbalance: f64,
    real_total: f64,
}

fn evaluate(a: &EvaluateArgs) -> CliResult<()> {
    let instance = instance_with(&a.instance, None)?;
    let solution = Solution::load(&a.solution).map_err(CliError::validation)?;
    solution.check_shape(&instance).map_err(CliError::validation)?;
    let instance = instance.with_gamma(solution.gamma).map_err(CliError::validation)?;
    let sequences = directions(Some(&a.directions), &instance)?;
    if sequences.is_empty() {
        return Err(CliError::validation("no direction sequences"));
    }
    out_dir(&a.out)?;
    let base = worst_case_profit(&solution, &instance).map_err(CliError::validation)?;
    let per_sequence = sequences
        .iter()
        .map(|seq| realized_imbalance_revenue(&solution, seq, &instance))
        .collect::<Result<Vec<f64>, _>>()
        .map_err(CliError::validation)?;
    let real_imbalance = per_sequence.iter().sum::<f64>() / per_sequence.len() as f64;
    let evaluation = Evaluation {
        gamma: solution.gamma,
        da_revenue: base.da_revenue,
        hydrogen_expected: base.hydrogen_net_expected(),
        real_imbalance,
        real_total: base.da_revenue + base.hydrogen_net_expected() + real_imbalance,
        imbalance_per_sequence: per_sequence,
    };
    write_json(&a.out.join("evaluation.json"), &evaluation)?;
    println!(
        "real total {:.2} EUR over {} sequences (imbalance {:.2} EUR)",
        evaluation.real_total,
        sequences.len(),
        evaluation.real_imbalance
    );
    Ok(())
}

#[derive(Serialize)]
struct VerifyOutcome {
    gamma: usize,
    objective: f64,
    recomputed: f64,
    violated_rows: usize,
    duality_issues: usize,
    enumeration: Option<EnumerationCheck>,
}

#[derive(Serialize)]
struct EnumerationCheck {
    grid_step: f64,
    best_profit: Option<f64>,
    upper_slack: f64,
}

/// Instances small enough for exhaustive enumeration.
fn is_micro(instance: &Instance) -> bool {
    instance.n_periods() <= 3 && instance.n_scenarios() <= 2
}

fn verify(a: &VerifyArgs) -> CliResult<()> {
    let base = instance_with(&a.instance, None)?;
    let options = solve_options(&a.solver)?;
    let backend = backend(&a.solver.backend)?;
    out_dir(&a.out)?;
    let solution = match &a.solution {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::validation(Error::io(path, e)))?;
            Solution::from_json_str(&text).map_err(CliError::verification)?
        }
        None => {
            let instance = match a.gamma {
                Some(g) => base.with_gamma(g).map_err(CliError::validation)?,
                None => base.clone(),
            };
            solve_and_check(&instance, backend.as_ref(), &options)?.solution
        }
    };
    let gamma = a.gamma.unwrap_or(solution.gamma);
    if solution.gamma != gamma {
        return Err(CliError::verification(format!(
            "solution was computed for gamma {}, not {gamma}",
            solution.gamma
        )));
    }
    let instance = base.with_gamma(gamma).map_err(CliError::validation)?;
    solution.check_shape(&instance).map_err(CliError::verification)?;

    let formulation = Formulation::build(&instance).map_err(CliError::validation)?;
    let violations = formulation.audit(&solution).map_err(CliError::verification)?;
    let duality = verify_duality(&solution, &instance, a.tol);
    let recomputed = worst_case_profit(&solution, &instance)
        .map_err(CliError::verification)?
        .total;

    let mut problems = Vec::new();
    if let Some(v) = violations.first() {
        problems.push(format!("{} violated rows, first `{}`", violations.len(), v.name));
    }
    if !duality.is_clean() {
        problems.push(format!("{} duality issues", duality.issues.len()));
    }
    if !((recomputed - solution.objective).abs() <= a.tol * recomputed.abs().max(1.0)) {
        problems.push(format!(
            "objective {} differs from the recomputed profit {recomputed}",
            solution.objective
        ));
    }
    let enumeration = if is_micro(&instance) {
        let grid_step = DEFAULT_GRID_STEP;
        match enumerate_tiny(&instance, grid_step) {
            Ok(e) => {
                let slack = lipschitz_constant(&instance) * grid_step;
                match e.best_profit {
                    Some(best) if problems.is_empty() => {
                        let obj = solution.objective;
                        let tol = a.tol * best.abs().max(1.0);
                        if obj < best - tol || obj > best + slack + tol {
                            problems.push(format!(
                                "objective {obj} outside the enumeration envelope [{best}, {}]",
                                best + slack
                            ));
                        }
                    }
                    None => problems.push("enumeration found no feasible schedule".into()),
                    _ => {}
                }
                Some(EnumerationCheck {
                    grid_step,
                    best_profit: e.best_profit,
                    upper_slack: slack,
                })
            }
            // Grids that do not divide the ratings skip this check.
            Err(e) => {
                log::warn!("enumeration skipped: {e}");
                None
            }
        }
    } else {
        None
    };
    let outcome = VerifyOutcome {
        gamma,
        objective: solution.objective,
        recomputed,
        violated_rows: violations.len(),
        duality_issues: duality.issues.len(),
        enumeration,
    };
    write_json(&a.out.join("verify.json"), &outcome)?;
    if problems.is_empty() {
        println!("gamma {gamma}: verified, objective {:.4} EUR", solution.objective);
        Ok(())
    } else {
        Err(CliError::verification(problems.join("; ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_ranges_are_inclusive() {
        assert_eq!(parse_gammas("0..3", 24).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(parse_gammas("0..24", 24).unwrap().len(), 25);
        assert_eq!(parse_gammas("2,5", 24).unwrap(), vec![2, 5]);
    }

    #[test]
    fn bad_gammas_are_rejected() {
        assert!(parse_gammas("0..25", 24).is_err());
        assert!(parse_gammas("3..1", 24).is_err());
        assert!(parse_gammas("a", 24).is_err());
    }

    #[test]
    fn unknown_backend_is_a_validation_error() {
        assert_eq!(backend("cplex").err().unwrap().code, EXIT_VALIDATION);
        assert!(backend("lp-file:highs").is_ok());
    }

    #[test]
    fn parse_failures_exit_one() {
        assert_eq!(run(["hybrid-bid", "solve"]), EXIT_VALIDATION);
        assert_eq!(run(["hybrid-bid", "frobnicate"]), EXIT_VALIDATION);
    }
}
