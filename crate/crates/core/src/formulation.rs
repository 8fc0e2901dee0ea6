//! Assembles the complete bidding MILP and maps solver output back to a
//! [`Solution`].

use crate::error::{Error, Result};
use crate::facility::{build_facility_with, FacilityOptions, VariableRegistry};
use crate::instance::Instance;
use crate::model::{MilpBackend, ModelIR, SolveOptions, SolveResult, VarId, VarKind, Violation};
use crate::robust::{add_sign_split, apply_robust_objective, RobustVars, SignSplitVars};
use crate::solution::{FirstStage, ScenarioSolution, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FormulationOptions {
    /// SOE-dependent charging curve; see [`FacilityOptions`].
    pub accurate_charging: bool,
    /// Add the valid sign-split rows of [`add_sign_split`]. They never change
    /// the optimum and make the search much faster.
    pub sign_split: bool,
}

impl Default for FormulationOptions {
    fn default() -> Self {
        Self {
            accurate_charging: true,
            sign_split: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Formulation {
    pub model: ModelIR,
    pub registry: VariableRegistry,
    pub robust: RobustVars,
    pub split: Option<SignSplitVars>,
    pub gamma: usize,
}

/// A solve together with everything needed to audit it.
#[derive(Debug, Clone)]
pub struct Solved {
    pub formulation: Formulation,
    pub result: SolveResult,
    pub solution: Solution,
}

impl Solved {
    /// Rows, bounds and integrality violated by the solution.
    pub fn audit(&self) -> Result<Vec<Violation>> {
        self.formulation.audit(&self.solution)
    }
}

impl Formulation {
    /// Builds the facility model and the robust objective for the budget
    /// stored in `instance.imbalance.gamma`.
    pub fn build(instance: &Instance) -> Result<Self> {
        Self::build_with(instance, FormulationOptions::default())
    }

    pub fn build_with(instance: &Instance, options: FormulationOptions) -> Result<Self> {
        let facility = FacilityOptions {
            accurate_charging: options.accurate_charging,
        };
        let (mut model, registry) = build_facility_with(instance, facility)?;
        let robust = apply_robust_objective(&mut model, &registry, instance)?;
        let split = if options.sign_split {
            Some(add_sign_split(&mut model, &registry, &robust, instance)?)
        } else {
            None
        };
        Ok(Self {
            model,
            registry,
            robust,
            split,
            gamma: instance.imbalance.gamma,
        })
    }

    pub fn solve(self, backend: &dyn MilpBackend, options: &SolveOptions) -> Result<Solved> {
        self.solve_from(backend, options, None)
    }

    /// Solves, optionally starting from a known schedule (for instance the
    /// optimum of a neighbouring budget, which is feasible for every budget).
    ///
    /// Any incumbent is polished: the binaries are fixed and the remaining
    /// LP is re-solved, so the robust duals are exactly optimal for the
    /// returned dispatch even when the search stopped early.
    pub fn solve_from(
        self,
        backend: &dyn MilpBackend,
        options: &SolveOptions,
        start: Option<&Solution>,
    ) -> Result<Solved> {
        let start = start.map(|s| self.point_of(s)).transpose()?;
        let raw = backend.solve_from(&self.model, options, start.as_deref())?;
        let result = match raw.primal_values {
            Some(_) => self.polish(backend, options, raw)?,
            None => raw,
        };
        let solution = self.extract(&result)?;
        Ok(Solved {
            formulation: self,
            result,
            solution,
        })
    }

    fn polish(
        &self,
        backend: &dyn MilpBackend,
        options: &SolveOptions,
        result: SolveResult,
    ) -> Result<SolveResult> {
        if self.model.num_binaries() == 0 {
            return Ok(result);
        }
        let point = result.primal_values.as_ref().expect("incumbent");
        let mut fixed = self.model.clone();
        for (i, v) in self.model.variables().iter().enumerate() {
            if v.kind == VarKind::Binary {
                let b = point[i].round().clamp(0.0, 1.0);
                fixed.set_bounds(VarId(i), b, b)?;
            }
        }
        let lp = backend.solve_from(&fixed, options, Some(point))?;
        match lp.primal_values {
            Some(values) if lp.is_optimal() && lp.objective_value >= result.objective_value - 1e-6 * result.objective_value.abs().max(1.0) => {
                Ok(SolveResult {
                    status: result.status,
                    objective_value: lp.objective_value,
                    primal_values: Some(values),
                    mip_gap: result.mip_gap,
                    wall_time: result.wall_time + lp.wall_time,
                })
            }
            _ => {
                log::warn!("polishing LP did not improve the incumbent; keeping it");
                Ok(result)
            }
        }
    }

    /// Reads the schedule out of a result that carries a primal point.
    pub fn extract(&self, result: &SolveResult) -> Result<Solution> {
        let point = result
            .primal_values
            .as_deref()
            .ok_or_else(|| Error::NotOptimal(result.status.to_string()))?;
        let mut solution = self.empty_solution();
        solution.objective = result.objective_value;
        self.visit(&mut solution, |handle, slot| *slot = point[handle.0]);
        Ok(solution)
    }

    /// Dense variable vector for a stored solution, for auditing it against
    /// the model or starting a solve from it. Fails when the solution does
    /// not match the dimensions.
    pub fn point_of(&self, solution: &Solution) -> Result<Vec<f64>> {
        if shape_signature(solution) != shape_signature(&self.empty_solution()) {
            return Err(Error::IncompleteSolution(
                "solution dimensions differ from the model".into(),
            ));
        }
        let mut copy = solution.clone();
        let mut point = vec![f64::NAN; self.model.num_vars()];
        self.visit(&mut copy, |handle, slot| point[handle.0] = *slot);
        if let Some(split) = &self.split {
            for (s, sc) in solution.scenarios.iter().enumerate() {
                for (t, &d) in sc.d.iter().enumerate() {
                    point[split.d_pos[s][t].0] = d.max(0.0);
                    point[split.d_neg[s][t].0] = (-d).max(0.0);
                }
            }
        }
        Ok(point)
    }

    /// Rows, bounds and integrality of this model violated by `solution`.
    pub fn audit(&self, solution: &Solution) -> Result<Vec<Violation>> {
        self.model.evaluate_constraints(&self.point_of(solution)?)
    }

    fn empty_solution(&self) -> Solution {
        let n = self.registry.n_periods();
        let z = || vec![0.0; n];
        let first_stage = FirstStage {
            mp: z(),
            ch_da: z(),
            dis_da: z(),
            el_da: z(),
            x_e: z(),
            x_b_da: z(),
        };
        let scenarios = self
            .registry
            .scenarios
            .iter()
            .map(|sc| ScenarioSolution {
                d: z(),
                r: z(),
                res: z(),
                ch_b_plus: z(),
                ch_b_minus: z(),
                dis_b_plus: z(),
                dis_b_minus: z(),
                el_b_plus: z(),
                el_b_minus: z(),
                soe: z(),
                soe_seg: sc.soe_seg.iter().map(|segs| vec![0.0; segs.len()]).collect(),
                x_b_b: z(),
                hydrogen: z(),
                el: z(),
                el_net: z(),
                omega: 0.0,
                z: z(),
                y: z(),
                mu1: z(),
                mu2: z(),
                xd1: z(),
                xd2: z(),
            })
            .collect();
        Solution {
            gamma: self.gamma,
            objective: f64::NAN,
            first_stage,
            scenarios,
        }
    }

    /// Calls `f` for every (handle, value slot) pair of the solution.
    fn visit(&self, solution: &mut Solution, mut f: impl FnMut(VarId, &mut f64)) {
        fn pair(handles: &[VarId], values: &mut [f64], f: &mut impl FnMut(VarId, &mut f64)) {
            for (h, v) in handles.iter().zip(values.iter_mut()) {
                f(*h, v);
            }
        }
        let reg = &self.registry;
        let fs = &mut solution.first_stage;
        pair(&reg.first.mp, &mut fs.mp, &mut f);
        pair(&reg.first.ch_da, &mut fs.ch_da, &mut f);
        pair(&reg.first.dis_da, &mut fs.dis_da, &mut f);
        pair(&reg.first.el_da, &mut fs.el_da, &mut f);
        pair(&reg.first.x_e, &mut fs.x_e, &mut f);
        pair(&reg.first.x_b_da, &mut fs.x_b_da, &mut f);
        let rob = &self.robust;
        for (s, (h, v)) in reg.scenarios.iter().zip(&mut solution.scenarios).enumerate() {
            pair(&h.d, &mut v.d, &mut f);
            pair(&h.r, &mut v.r, &mut f);
            pair(&h.res, &mut v.res, &mut f);
            pair(&h.ch_b_plus, &mut v.ch_b_plus, &mut f);
            pair(&h.ch_b_minus, &mut v.ch_b_minus, &mut f);
            pair(&h.dis_b_plus, &mut v.dis_b_plus, &mut f);
            pair(&h.dis_b_minus, &mut v.dis_b_minus, &mut f);
            pair(&h.el_b_plus, &mut v.el_b_plus, &mut f);
            pair(&h.el_b_minus, &mut v.el_b_minus, &mut f);
            pair(&h.soe, &mut v.soe, &mut f);
            for (hs, vs) in h.soe_seg.iter().zip(&mut v.soe_seg) {
                pair(hs, vs, &mut f);
            }
            pair(&h.x_b_b, &mut v.x_b_b, &mut f);
            pair(&h.hydrogen, &mut v.hydrogen, &mut f);
            pair(&h.el, &mut v.el, &mut f);
            pair(&h.el_net, &mut v.el_net, &mut f);
            f(rob.omega[s], &mut v.omega);
            pair(&rob.z[s], &mut v.z, &mut f);
            pair(&rob.y[s], &mut v.y, &mut f);
            pair(&rob.mu1[s], &mut v.mu1, &mut f);
            pair(&rob.mu2[s], &mut v.mu2, &mut f);
            pair(&rob.xd1[s], &mut v.xd1, &mut f);
            pair(&rob.xd2[s], &mut v.xd2, &mut f);
        }
    }
}

fn shape_signature(solution: &Solution) -> Vec<usize> {
    let f = &solution.first_stage;
    let mut sig = vec![
        f.mp.len(),
        f.ch_da.len(),
        f.dis_da.len(),
        f.el_da.len(),
        f.x_e.len(),
        f.x_b_da.len(),
        solution.scenarios.len(),
    ];
    for sc in &solution.scenarios {
        sig.extend(sc.series().iter().map(|(_, v)| v.len()));
        sig.push(sc.soe_seg.len());
        sig.extend(sc.soe_seg.iter().map(Vec::len));
    }
    sig
}

/// Builds and solves the bidding problem for the budget in `instance`.
pub fn solve_instance(
    instance: &Instance,
    backend: &dyn MilpBackend,
    options: &SolveOptions,
) -> Result<Solved> {
    Formulation::build(instance)?.solve(backend, options)
}
