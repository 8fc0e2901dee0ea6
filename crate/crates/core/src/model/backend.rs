use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ModelIR, VarId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Relative MIP gap at which the search stops.
    pub mip_gap_tol: f64,
    /// Wall-clock limit in seconds.
    pub time_limit: f64,
    pub threads: u32,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            mip_gap_tol: 1e-6,
            time_limit: 600.0,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    TimeLimit,
    NumericFailure,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Objective evaluated at `primal_values`; NaN when there is no point.
    pub objective_value: f64,
    /// Present for optimal solves and time-limited solves with an incumbent.
    pub primal_values: Option<Vec<f64>>,
    pub mip_gap: f64,
    /// Seconds.
    pub wall_time: f64,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn value(&self, var: VarId) -> Option<f64> {
        self.primal_values.as_ref().map(|x| x[var.0])
    }

    /// Primal point of an optimal solve, or an error naming the status.
    pub fn optimal_point(&self) -> Result<&[f64]> {
        match (&self.status, &self.primal_values) {
            (SolveStatus::Optimal, Some(x)) => Ok(x),
            (status, _) => Err(Error::NotOptimal(status.to_string())),
        }
    }

    pub(crate) fn without_point(status: SolveStatus, wall_time: f64) -> Self {
        Self {
            status,
            objective_value: f64::NAN,
            primal_values: None,
            mip_gap: f64::NAN,
            wall_time,
        }
    }

    /// Builds a result from raw backend output, recomputing the objective
    /// from the primal point and rejecting inconsistent reports.
    pub(crate) fn from_point(
        model: &ModelIR,
        status: SolveStatus,
        point: Vec<f64>,
        reported_objective: f64,
        mip_gap: f64,
        wall_time: f64,
    ) -> Result<Self> {
        if point.len() != model.num_vars() {
            return Err(Error::NumericFailure(format!(
                "backend returned {} values for {} variables",
                point.len(),
                model.num_vars()
            )));
        }
        let objective_value = model.objective().evaluate(&point);
        let scale = objective_value.abs().max(1.0);
        if reported_objective.is_finite() && (objective_value - reported_objective).abs() > 1e-6 * scale
        {
            return Err(Error::NumericFailure(format!(
                "reported objective {reported_objective} differs from evaluated {objective_value}"
            )));
        }
        Ok(Self {
            status,
            objective_value,
            primal_values: Some(point),
            mip_gap,
            wall_time,
        })
    }
}

/// A MILP solver able to optimise a [`ModelIR`] (always maximisation).
pub trait MilpBackend: Send + Sync {
    fn name(&self) -> &str;

    fn solve(&self, model: &ModelIR, options: &SolveOptions) -> Result<SolveResult> {
        self.solve_from(model, options, None)
    }

    /// Solves with an optional starting point (one value per variable).
    /// Backends that cannot use it simply ignore it.
    fn solve_from(
        &self,
        model: &ModelIR,
        options: &SolveOptions,
        start: Option<&[f64]>,
    ) -> Result<SolveResult>;
}
