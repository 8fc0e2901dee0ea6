//! Budget sweeps, ex-post settlement against realised directions,
//! technology ablations and CSV export.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulation::{Formulation, FormulationOptions, Solved};
use crate::instance::{Direction, DirectionSequence, Instance};
use crate::model::{MilpBackend, SolveOptions, SolveStatus};
use crate::oracle::{worst_case_flags, worst_case_profit};
use crate::robust::{refit_duals, verify_duality};
use crate::solution::Solution;

/// Imbalance revenue of a fixed schedule when every scenario meets the
/// same system directions. No re-dispatch takes place.
pub fn realized_imbalance_revenue(
    solution: &Solution,
    directions: &DirectionSequence,
    instance: &Instance,
) -> Result<f64> {
    let per_scenario = vec![directions.clone(); solution.n_scenarios()];
    realized_imbalance_revenue_per_scenario(solution, &per_scenario, instance)
}

/// As [`realized_imbalance_revenue`] with one direction sequence per
/// scenario.
pub fn realized_imbalance_revenue_per_scenario(
    solution: &Solution,
    directions: &[DirectionSequence],
    instance: &Instance,
) -> Result<f64> {
    solution.check_shape(instance)?;
    if directions.len() != solution.n_scenarios() {
        return Err(Error::LengthMismatch {
            what: "direction sequences per scenario".into(),
            expected: solution.n_scenarios(),
            found: directions.len(),
        });
    }
    let n = instance.n_periods();
    let kappa = instance.imbalance.kappa;
    let mut total = 0.0;
    for ((sc, seq), pi) in solution
        .scenarios
        .iter()
        .zip(directions)
        .zip(&instance.pv.probabilities)
    {
        if seq.len() != n {
            return Err(Error::LengthMismatch {
                what: "direction sequence".into(),
                expected: n,
                found: seq.len(),
            });
        }
        let revenue: f64 = (0..n)
            .map(|t| instance.prices.da_price[t] * seq.directions[t].price_factor(kappa) * sc.d[t])
            .sum();
        total += pi * revenue;
    }
    Ok(total)
}

/// System directions realising the model's own worst case, one sequence
/// per scenario. An adverse hour is a surplus when the facility is long and
/// a shortage when it is short.
pub fn worst_case_directions(solution: &Solution, instance: &Instance) -> Vec<DirectionSequence> {
    let flags = worst_case_flags(solution, instance);
    solution
        .scenarios
        .iter()
        .zip(flags)
        .map(|(sc, b)| {
            let directions = sc
                .d
                .iter()
                .zip(b)
                .map(|(&d, adverse)| {
                    // Adverse: long meets surplus, short meets shortage.
                    let surplus = adverse == (d > 0.0);
                    if surplus {
                        Direction::SystemSurplus
                    } else {
                        Direction::SystemShortage
                    }
                })
                .collect();
            DirectionSequence::new(directions)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowStatus {
    Optimal,
    /// Stopped at the time limit with a verified incumbent.
    TimeLimit,
    Failed(String),
}

impl RowStatus {
    pub fn is_failed(&self) -> bool {
        matches!(self, RowStatus::Failed(_))
    }
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowStatus::Optimal => f.write_str("optimal"),
            RowStatus::TimeLimit => f.write_str("time_limit"),
            RowStatus::Failed(msg) => write!(f, "failed: {msg}"),
        }
    }
}

impl FromStr for RowStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimal" => Ok(RowStatus::Optimal),
            "time_limit" => Ok(RowStatus::TimeLimit),
            _ => s
                .strip_prefix("failed: ")
                .map(|m| RowStatus::Failed(m.to_string()))
                .ok_or_else(|| Error::Parse {
                    what: "row status".into(),
                    message: format!("unknown status `{s}`"),
                }),
        }
    }
}

/// One budget of a sweep. Money in EUR; NaN marks a missing value.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub gamma: usize,
    pub status: RowStatus,
    /// Worst-case expected profit recomputed from the schedule.
    pub total_expected: f64,
    pub da_revenue: f64,
    /// Hydrogen sales net of water cost.
    pub hydrogen_expected: f64,
    pub imbalance_expected: f64,
    pub real_total: f64,
    /// Mean over the direction sequences.
    pub real_imbalance: f64,
    pub objective: f64,
    pub mip_gap: f64,
    pub wall_time: f64,
    pub solution: Option<Solution>,
}

impl SweepRow {
    fn failed(gamma: usize, message: String, wall_time: f64) -> Self {
        Self {
            gamma,
            status: RowStatus::Failed(message),
            total_expected: f64::NAN,
            da_revenue: f64::NAN,
            hydrogen_expected: f64::NAN,
            imbalance_expected: f64::NAN,
            real_total: f64::NAN,
            real_imbalance: f64::NAN,
            objective: f64::NAN,
            mip_gap: f64::NAN,
            wall_time,
            solution: None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepReport {
    /// Sorted by budget.
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, gamma: usize) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.gamma == gamma)
    }

    pub fn failed_rows(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.status.is_failed())
    }

    /// Smallest budget from which every later row matches the last one
    /// within `rel_tol`. `None` when no row succeeded.
    pub fn plateau_start(&self, rel_tol: f64) -> Option<usize> {
        let ok: Vec<&SweepRow> = self.rows.iter().filter(|r| !r.status.is_failed()).collect();
        let last = ok.last()?.total_expected;
        let close = |v: f64| (v - last).abs() <= rel_tol * last.abs().max(1.0);
        let mut start = ok.last()?.gamma;
        for r in ok.iter().rev() {
            if !close(r.total_expected) {
                break;
            }
            start = r.gamma;
        }
        Some(start)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub solve: SolveOptions,
    pub formulation: FormulationOptions,
    /// Relative tolerance of the duality check run on every row.
    pub duality_tol: f64,
    /// Solve budgets from high to low, starting each from the previous
    /// schedule. Runs sequentially; otherwise budgets are solved in
    /// parallel from scratch.
    pub warm_start: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            solve: SolveOptions::default(),
            formulation: FormulationOptions::default(),
            duality_tol: 1e-4,
            warm_start: true,
        }
    }
}

fn check_gammas(instance: &Instance, gammas: &[usize]) -> Result<Vec<usize>> {
    let n = instance.n_periods();
    if let Some(&g) = gammas.iter().find(|&&g| g > n) {
        return Err(Error::validation(
            "gammas",
            format!("budget {g} exceeds the {n} periods"),
        ));
    }
    let mut unique = gammas.to_vec();
    unique.sort_unstable();
    unique.dedup();
    Ok(unique)
}

/// Solves `instance` at budget `gamma`, optionally from a schedule that is
/// feasible for it (a neighbouring budget or a smaller configuration).
pub fn solve_at(
    instance: &Instance,
    gamma: usize,
    backend: &dyn MilpBackend,
    options: &SweepOptions,
    start: Option<&Solution>,
) -> Result<Solved> {
    let instance = instance.with_gamma(gamma)?;
    let start = start.map(|s| {
        let mut s = s.clone();
        refit_duals(&mut s, &instance, gamma);
        s
    });
    Formulation::build_with(&instance, options.formulation)?.solve_from(
        backend,
        &options.solve,
        start.as_ref(),
    )
}

/// Verifies a solve and turns it into a row. Rows whose duality check or
/// feasibility audit fails are marked failed.
fn assess(
    instance: &Instance,
    gamma: usize,
    solved: Result<Solved>,
    directions: &[DirectionSequence],
    options: &SweepOptions,
) -> SweepRow {
    let solved = match solved {
        Ok(s) => s,
        Err(e) => return SweepRow::failed(gamma, e.to_string(), f64::NAN),
    };
    let wall_time = solved.result.wall_time;
    let status = match solved.result.status {
        SolveStatus::Optimal => RowStatus::Optimal,
        SolveStatus::TimeLimit => RowStatus::TimeLimit,
        other => return SweepRow::failed(gamma, other.to_string(), wall_time),
    };
    let instance = match instance.with_gamma(gamma) {
        Ok(i) => i,
        Err(e) => return SweepRow::failed(gamma, e.to_string(), wall_time),
    };
    let solution = solved.solution.clone();
    if let Err(e) = verify_duality(&solution, &instance, options.duality_tol).into_result() {
        return SweepRow::failed(gamma, e.to_string(), wall_time);
    }
    match solved.audit() {
        Ok(v) if v.is_empty() => {}
        Ok(v) => {
            let msg = format!("{} violated rows, first `{}`", v.len(), v[0].name);
            return SweepRow::failed(gamma, msg, wall_time);
        }
        Err(e) => return SweepRow::failed(gamma, e.to_string(), wall_time),
    }
    let breakdown = match worst_case_profit(&solution, &instance) {
        Ok(b) => b,
        Err(e) => return SweepRow::failed(gamma, e.to_string(), wall_time),
    };
    let real_imbalance = if directions.is_empty() {
        f64::NAN
    } else {
        let mut sum = 0.0;
        for seq in directions {
            match realized_imbalance_revenue(&solution, seq, &instance) {
                Ok(v) => sum += v,
                Err(e) => return SweepRow::failed(gamma, e.to_string(), wall_time),
            }
        }
        sum / directions.len() as f64
    };
    let hydrogen = breakdown.hydrogen_net_expected();
    SweepRow {
        gamma,
        status,
        total_expected: breakdown.total,
        da_revenue: breakdown.da_revenue,
        hydrogen_expected: hydrogen,
        imbalance_expected: breakdown.imbalance_revenue_expected,
        real_total: breakdown.da_revenue + hydrogen + real_imbalance,
        real_imbalance,
        objective: solved.result.objective_value,
        mip_gap: solved.result.mip_gap,
        wall_time,
        solution: Some(solution),
    }
}

/// One solve per distinct budget, each verified before its row is kept.
/// Repeated budgets share one solve. Solver failures mark the row and the
/// sweep continues.
pub fn gamma_sweep(
    instance: &Instance,
    gammas: &[usize],
    directions: &[DirectionSequence],
    backend: &dyn MilpBackend,
    options: &SweepOptions,
) -> Result<SweepReport> {
    instance.validate()?;
    let unique = check_gammas(instance, gammas)?;
    let solved: BTreeMap<usize, SweepRow> = if options.warm_start {
        let mut out = BTreeMap::new();
        let mut previous: Option<Solution> = None;
        for &g in unique.iter().rev() {
            let solved = solve_at(instance, g, backend, options, previous.as_ref());
            let row = assess(instance, g, solved, directions, options);
            if let Some(sol) = &row.solution {
                previous = Some(sol.clone());
            }
            log::info!("gamma {g}: {} {:.4}", row.status, row.total_expected);
            out.insert(g, row);
        }
        out
    } else {
        unique
            .par_iter()
            .map(|&g| {
                let solved = solve_at(instance, g, backend, options, None);
                (g, assess(instance, g, solved, directions, options))
            })
            .collect()
    };
    let mut rows: Vec<SweepRow> = gammas.iter().map(|g| solved[g].clone()).collect();
    rows.sort_by_key(|r| r.gamma);
    Ok(SweepReport { rows })
}

/// Technology subsets of the facility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Technology {
    Pv,
    PvEl,
    PvBat,
    PvElBat,
}

impl Technology {
    pub const ALL: [Technology; 4] = [
        Technology::Pv,
        Technology::PvEl,
        Technology::PvBat,
        Technology::PvElBat,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Technology::Pv => "PV",
            Technology::PvEl => "PV+EL",
            Technology::PvBat => "PV+BAT",
            Technology::PvElBat => "PV+EL+BAT",
        }
    }

    pub fn has_battery(self) -> bool {
        matches!(self, Technology::PvBat | Technology::PvElBat)
    }

    pub fn has_electrolyzer(self) -> bool {
        matches!(self, Technology::PvEl | Technology::PvElBat)
    }

    /// Configurations whose feasible set this one contains.
    pub fn subsets(self) -> Vec<Technology> {
        Technology::ALL
            .into_iter()
            .filter(|&o| {
                o != self
                    && (!o.has_battery() || self.has_battery())
                    && (!o.has_electrolyzer() || self.has_electrolyzer())
            })
            .collect()
    }

    /// The instance with the missing units rated at zero.
    pub fn apply(self, instance: &Instance) -> Instance {
        let mut out = instance.clone();
        if !self.has_battery() {
            out.battery.capacity = 0.0;
            out.battery.rated_power = 0.0;
            out.battery.initial_soe = 0.0;
        }
        if !self.has_electrolyzer() {
            out.electrolyzer.rated_power = 0.0;
        }
        out
    }
}

impl fmt::Display for Technology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Default)]
pub struct AblationReport {
    pub configurations: Vec<(Technology, SweepReport)>,
}

impl AblationReport {
    pub fn report(&self, tech: Technology) -> Option<&SweepReport> {
        self.configurations.iter().find(|(t, _)| *t == tech).map(|(_, r)| r)
    }

    /// Budgets and configuration pairs where a configuration earns less
    /// than one of its subsets by more than `rel_tol`.
    pub fn dominance_violations(&self, rel_tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        for (tech, report) in &self.configurations {
            for sub in tech.subsets() {
                let Some(sub_report) = self.report(sub) else { continue };
                for row in &report.rows {
                    let Some(sub_row) = sub_report.row(row.gamma) else { continue };
                    let (big, small) = (row.total_expected, sub_row.total_expected);
                    if big.is_nan() || small.is_nan() {
                        continue;
                    }
                    if big < small - rel_tol * small.abs().max(1.0) {
                        out.push(format!(
                            "gamma {}: {tech} earns {big:.4} below {sub} at {small:.4}",
                            row.gamma
                        ));
                    }
                }
            }
        }
        out
    }
}

/// Sweeps every technology configuration.
///
/// With warm starts each solve begins from the best verified schedule
/// among the same configuration at the next higher budget and the smaller
/// configurations at this budget, all of which are feasible for it.
pub fn technology_ablation(
    instance: &Instance,
    gammas: &[usize],
    directions: &[DirectionSequence],
    backend: &dyn MilpBackend,
    options: &SweepOptions,
) -> Result<AblationReport> {
    instance.validate()?;
    let unique = check_gammas(instance, gammas)?;
    let configs: Vec<(Technology, Instance)> =
        Technology::ALL.iter().map(|&t| (t, t.apply(instance))).collect();
    let mut rows: BTreeMap<(Technology, usize), SweepRow> = BTreeMap::new();
    if options.warm_start {
        let mut previous: BTreeMap<Technology, Solution> = BTreeMap::new();
        for &g in unique.iter().rev() {
            for (tech, inst) in &configs {
                let mut candidates: Vec<&Solution> = previous.get(tech).into_iter().collect();
                for sub in tech.subsets() {
                    if let Some(sol) = rows.get(&(sub, g)).and_then(|r| r.solution.as_ref()) {
                        candidates.push(sol);
                    }
                }
                let start = best_start(&candidates, inst, g);
                let solved = solve_at(inst, g, backend, options, start.as_ref());
                let row = assess(inst, g, solved, directions, options);
                if let Some(sol) = &row.solution {
                    previous.insert(*tech, sol.clone());
                }
                log::info!("{tech} gamma {g}: {} {:.4}", row.status, row.total_expected);
                rows.insert((*tech, g), row);
            }
        }
    } else {
        let jobs: Vec<(Technology, &Instance, usize)> = configs
            .iter()
            .flat_map(|(t, inst)| unique.iter().map(move |&g| (*t, inst, g)))
            .collect();
        rows = jobs
            .par_iter()
            .map(|&(t, inst, g)| {
                let solved = solve_at(inst, g, backend, options, None);
                ((t, g), assess(inst, g, solved, directions, options))
            })
            .collect();
    }
    let configurations = Technology::ALL
        .iter()
        .map(|&t| {
            let mut report_rows: Vec<SweepRow> =
                gammas.iter().map(|&g| rows[&(t, g)].clone()).collect();
            report_rows.sort_by_key(|r| r.gamma);
            (t, SweepReport { rows: report_rows })
        })
        .collect();
    Ok(AblationReport { configurations })
}

/// Candidate with the highest worst-case profit at budget `gamma`.
fn best_start(candidates: &[&Solution], instance: &Instance, gamma: usize) -> Option<Solution> {
    let mut best: Option<(f64, Solution)> = None;
    for cand in candidates {
        let mut sol = (*cand).clone();
        sol.gamma = gamma;
        let Ok(profit) = worst_case_profit(&sol, instance) else { continue };
        if best.as_ref().map_or(true, |(b, _)| profit.total > *b) {
            best = Some((profit.total, sol));
        }
    }
    best.map(|(_, s)| s)
}

pub const SWEEP_HEADER: [&str; 10] = [
    "gamma",
    "status",
    "total_expected",
    "da_revenue",
    "hydrogen_expected",
    "imbalance_expected",
    "real_total",
    "real_imbalance",
    "objective",
    "mip_gap",
];

/// Fixed six-decimal notation; NaN becomes an empty field.
fn fixed(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        let s = format!("{x:.6}");
        if s == "-0.000000" {
            "0.000000".into()
        } else {
            s
        }
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::new(std::io::ErrorKind::Other, e))
}

/// Writes `sweep.csv`, `positions.csv`, `soe.csv` and `electrolyzer.csv`
/// into `dir` (created if needed) and returns their paths.
pub fn export_report(report: &SweepReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    if report.is_empty() {
        return Err(Error::EmptyReport);
    }
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let sweep = dir.join("sweep.csv");
    let mut w = csv_writer(&sweep)?;
    w.write_record(SWEEP_HEADER).map_err(|e| csv_err(&sweep, e))?;
    for r in &report.rows {
        let record = [
            r.gamma.to_string(),
            r.status.to_string(),
            fixed(r.total_expected),
            fixed(r.da_revenue),
            fixed(r.hydrogen_expected),
            fixed(r.imbalance_expected),
            fixed(r.real_total),
            fixed(r.real_imbalance),
            fixed(r.objective),
            fixed(r.mip_gap),
        ];
        w.write_record(&record).map_err(|e| csv_err(&sweep, e))?;
    }
    w.flush().map_err(|e| Error::io(&sweep, e))?;

    let solved: Vec<(usize, &Solution)> = report
        .rows
        .iter()
        .filter_map(|r| r.solution.as_ref().map(|s| (r.gamma, s)))
        .collect();

    let positions = dir.join("positions.csv");
    let mut w = csv_writer(&positions)?;
    w.write_record(["gamma", "t", "mp", "ch_da", "dis_da", "el_da"])
        .map_err(|e| csv_err(&positions, e))?;
    for (g, sol) in &solved {
        let f = &sol.first_stage;
        for t in 0..sol.n_periods() {
            w.write_record([
                g.to_string(),
                t.to_string(),
                fixed(f.mp[t]),
                fixed(f.ch_da[t]),
                fixed(f.dis_da[t]),
                fixed(f.el_da[t]),
            ])
            .map_err(|e| csv_err(&positions, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(&positions, e))?;

    let soe = dir.join("soe.csv");
    let mut w = csv_writer(&soe)?;
    w.write_record(["gamma", "scenario", "t", "soe"])
        .map_err(|e| csv_err(&soe, e))?;
    for (g, sol) in &solved {
        for (s, sc) in sol.scenarios.iter().enumerate() {
            for (t, v) in sc.soe.iter().enumerate() {
                w.write_record([g.to_string(), s.to_string(), t.to_string(), fixed(*v)])
                    .map_err(|e| csv_err(&soe, e))?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(&soe, e))?;

    let electrolyzer = dir.join("electrolyzer.csv");
    let mut w = csv_writer(&electrolyzer)?;
    w.write_record(["gamma", "scenario", "t", "on", "el", "hydrogen"])
        .map_err(|e| csv_err(&electrolyzer, e))?;
    for (g, sol) in &solved {
        for (s, sc) in sol.scenarios.iter().enumerate() {
            for t in 0..sol.n_periods() {
                w.write_record([
                    g.to_string(),
                    s.to_string(),
                    t.to_string(),
                    fixed(sol.first_stage.x_e[t].round()),
                    fixed(sc.el[t]),
                    fixed(sc.hydrogen[t]),
                ])
                .map_err(|e| csv_err(&electrolyzer, e))?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(&electrolyzer, e))?;

    Ok(vec![sweep, positions, soe, electrolyzer])
}

/// Exports each configuration into a subdirectory named after it plus an
/// `ablation.csv` with the expected profit of every configuration per budget.
pub fn export_ablation(report: &AblationReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    if report.configurations.iter().all(|(_, r)| r.is_empty()) {
        return Err(Error::EmptyReport);
    }
    let dir = dir.as_ref();
    let mut files = Vec::new();
    for (tech, sweep) in &report.configurations {
        let sub = dir.join(tech.label().to_lowercase().replace('+', "_"));
        files.extend(export_report(sweep, sub)?);
    }
    let summary = dir.join("ablation.csv");
    let mut w = csv_writer(&summary)?;
    let mut header = vec!["gamma".to_string()];
    header.extend(report.configurations.iter().map(|(t, _)| t.label().to_string()));
    w.write_record(&header).map_err(|e| csv_err(&summary, e))?;
    let gammas: Vec<usize> = report.configurations[0].1.rows.iter().map(|r| r.gamma).collect();
    for (i, g) in gammas.iter().enumerate() {
        let mut record = vec![g.to_string()];
        record.extend(
            report
                .configurations
                .iter()
                .map(|(_, r)| fixed(r.rows.get(i).map_or(f64::NAN, |row| row.total_expected))),
        );
        w.write_record(&record).map_err(|e| csv_err(&summary, e))?;
    }
    w.flush().map_err(|e| Error::io(&summary, e))?;
    files.push(summary);
    Ok(files)
}

/// Parses a `sweep.csv` written by [`export_report`]. Solutions and wall
/// times are not stored and come back empty.
pub fn read_sweep_csv(path: impl AsRef<Path>) -> Result<SweepReport> {
    let path = path.as_ref();
    let parse_err = |message: String| Error::Parse {
        what: path.display().to_string(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| parse_err(e.to_string()))?;
    let header = reader.headers().map_err(|e| parse_err(e.to_string()))?;
    if header.iter().ne(SWEEP_HEADER) {
        return Err(parse_err("unexpected header".into()));
    }
    let num = |field: &str| -> Result<f64> {
        if field.is_empty() {
            Ok(f64::NAN)
        } else {
            field
                .parse()
                .map_err(|_| parse_err(format!("`{field}` is not a number")))
        }
    };
    let mut rows = Vec::new();
    for record in reader.records() {
        let r = record.map_err(|e| parse_err(e.to_string()))?;
        rows.push(SweepRow {
            gamma: r[0]
                .parse()
                .map_err(|_| parse_err(format!("`{}` is not a budget", &r[0])))?,
            status: r[1].parse()?,
            total_expected: num(&r[2])?,
            da_revenue: num(&r[3])?,
            hydrogen_expected: num(&r[4])?,
            imbalance_expected: num(&r[5])?,
            real_total: num(&r[6])?,
            real_imbalance: num(&r[7])?,
            objective: num(&r[8])?,
            mip_gap: num(&r[9])?,
            wall_time: f64::NAN,
            solution: None,
        });
    }
    Ok(SweepReport { rows })
}

/// Profit of `solution` when every scenario meets its own worst-case
/// directions through [`realized_imbalance_revenue_per_scenario`].
pub fn self_consistent_total(solution: &Solution, instance: &Instance) -> Result<f64> {
    let directions = worst_case_directions(solution, instance);
    let base = worst_case_profit(solution, instance)?;
    let imbalance = realized_imbalance_revenue_per_scenario(solution, &directions, instance)?;
    Ok(base.da_revenue + base.hydrogen_net_expected() + imbalance)
}
