use std::num::NonZeroU32;
use std::time::Instant;

use highs::{HighsModelStatus, RowProblem, Sense};

use super::backend::{MilpBackend, SolveOptions, SolveResult, SolveStatus};
use super::{ConstraintSense, ModelIR, VarKind};
use crate::error::{Error, Result};

/// In-process HiGHS solver.
#[derive(Debug, Clone, Copy, Default)]
pub struct HighsBackend {
    pub verbose: bool,
}

impl HighsBackend {
    pub fn new() -> Self {
        Self::default()
    }
}

impl MilpBackend for HighsBackend {
    fn name(&self) -> &str {
        "highs"
    }

    fn solve_from(
        &self,
        model: &ModelIR,
        options: &SolveOptions,
        warm_start: Option<&[f64]>,
    ) -> Result<SolveResult> {
        model.validate()?;
        let start = Instant::now();
        let mut problem = RowProblem::default();
        let objective = {
            let mut dense = vec![0.0; model.num_vars()];
            for &(v, c) in &model.objective().terms {
                dense[v.0] += c;
            }
            dense
        };
        let cols: Vec<_> = model
            .variables()
            .iter()
            .zip(&objective)
            .map(|(v, &cost)| {
                let bounds = v.lower..=v.upper;
                problem.add_column_with_integrality(cost, bounds, v.kind == VarKind::Binary)
            })
            .collect();
        for c in model.constraints() {
            let row: Vec<_> = c.terms.iter().map(|&(v, coef)| (cols[v.0], coef)).collect();
            match c.sense {
                ConstraintSense::Le => problem.add_row(..=c.rhs, row),
                ConstraintSense::Ge => problem.add_row(c.rhs.., row),
                ConstraintSense::Eq => problem.add_row(c.rhs..=c.rhs, row),
            }
        }

        let mut highs = problem.try_optimise(Sense::Maximise).map_err(|status| {
            Error::BackendUnavailable {
                backend: self.name().into(),
                message: format!("could not load model: {status:?}"),
            }
        })?;
        if !self.verbose {
            highs.make_quiet();
        }
        highs.set_option("mip_rel_gap", options.mip_gap_tol);
        highs.set_option("time_limit", options.time_limit);
        highs.set_option("random_seed", 0);
        highs.set_option("mip_feasibility_tolerance", 1e-7);
        highs.set_option("primal_feasibility_tolerance", 1e-8);
        highs.set_threads(NonZeroU32::new(options.threads.max(1)).expect("nonzero"));
        if let Some(start) = warm_start {
            if start.len() != model.num_vars() {
                return Err(Error::Model(format!(
                    "start has {} values for {} variables",
                    start.len(),
                    model.num_vars()
                )));
            }
            // A rejected start only costs the hint.
            if highs.try_set_solution(Some(start), None, None, None).is_err() {
                log::warn!("HiGHS rejected the starting point");
            }
        }

        let solved = highs
            .try_solve()
            .map_err(|status| Error::NumericFailure(format!("HiGHS run failed: {status:?}")))?;
        let elapsed = start.elapsed().as_secs_f64();
        let status = match solved.status() {
            HighsModelStatus::Optimal => SolveStatus::Optimal,
            HighsModelStatus::Infeasible => SolveStatus::Infeasible,
            HighsModelStatus::Unbounded | HighsModelStatus::UnboundedOrInfeasible => {
                SolveStatus::Unbounded
            }
            HighsModelStatus::ReachedTimeLimit => SolveStatus::TimeLimit,
            HighsModelStatus::ModelEmpty => SolveStatus::Optimal,
            other => {
                return Err(Error::NumericFailure(format!(
                    "HiGHS finished with status {other:?}"
                )))
            }
        };
        let has_point = match status {
            SolveStatus::Optimal => true,
            SolveStatus::TimeLimit => {
                solved.primal_solution_status() == highs::HighsSolutionStatus::Feasible
            }
            _ => false,
        };
        if !has_point {
            return Ok(SolveResult::without_point(status, elapsed));
        }
        let point = if model.num_vars() == 0 {
            Vec::new()
        } else {
            solved.get_solution().columns().to_vec()
        };
        let reported = solved.objective_value() + model.objective().constant;
        let gap = if model.num_binaries() == 0 { 0.0 } else { solved.mip_gap() };
        SolveResult::from_point(model, status, point, reported, gap, elapsed)
    }
}
