//! Solver-agnostic MILP representation and the backends that solve it.

mod backend;
mod highs_backend;
pub mod lp_format;
mod lp_file_backend;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use backend::{MilpBackend, SolveOptions, SolveResult, SolveStatus};
pub use highs_backend::HighsBackend;
pub use lp_file_backend::LpFileBackend;

/// Feasibility tolerance used when auditing a point against the model.
pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintSense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for ConstraintSense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintSense::Le => "<=",
            ConstraintSense::Eq => "=",
            ConstraintSense::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: ConstraintSense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, point: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * point[v.0]).sum()
    }

    /// Amount by which `point` violates this row; zero when satisfied.
    pub fn violation(&self, point: &[f64]) -> f64 {
        let lhs = self.activity(point);
        match self.sense {
            ConstraintSense::Le => (lhs - self.rhs).max(0.0),
            ConstraintSense::Ge => (self.rhs - lhs).max(0.0),
            ConstraintSense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Linear expression `sum(coef * var) + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn term(mut self, var: VarId, coef: f64) -> Self {
        self.add(var, coef);
        self
    }

    pub fn constant(mut self, value: f64) -> Self {
        self.constant += value;
        self
    }

    pub fn add(&mut self, var: VarId, coef: f64) {
        if coef != 0.0 {
            self.terms.push((var, coef));
        }
    }

    pub fn evaluate(&self, point: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * point[v.0]).sum::<f64>()
    }

    /// Merges repeated variables and drops zero coefficients.
    fn compacted(&self) -> Vec<(VarId, f64)> {
        let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(self.terms.len());
        let mut seen: HashMap<VarId, usize> = HashMap::new();
        for &(v, c) in &self.terms {
            match seen.get(&v) {
                Some(&i) => merged[i].1 += c,
                None => {
                    seen.insert(v, merged.len());
                    merged.push((v, c));
                }
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        merged
    }
}

/// Maximisation objective.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Objective {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl Objective {
    pub fn evaluate(&self, point: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * point[v.0]).sum::<f64>()
    }
}

/// A row reported by [`ModelIR::evaluate_constraints`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub name: String,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ModelIR {
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Objective,
    by_name: HashMap<String, VarId>,
}

impl ModelIR {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count()
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        kind: VarKind,
    ) -> Result<VarId> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(Error::Model(format!("duplicate variable `{name}`")));
        }
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(Error::Model(format!(
                "variable `{name}` has bounds [{lower}, {upper}]"
            )));
        }
        if kind == VarKind::Binary && (lower < 0.0 || upper > 1.0) {
            return Err(Error::Model(format!(
                "binary `{name}` has bounds outside [0, 1]"
            )));
        }
        let id = VarId(self.variables.len());
        self.by_name.insert(name.clone(), id);
        self.variables.push(Variable {
            name,
            lower,
            upper,
            kind,
        });
        Ok(id)
    }

    pub fn continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> Result<VarId> {
        self.add_var(name, lower, upper, VarKind::Continuous)
    }

    pub fn binary(&mut self, name: impl Into<String>) -> Result<VarId> {
        self.add_var(name, 0.0, 1.0, VarKind::Binary)
    }

    /// Adds `expr (sense) rhs`; any constant in `expr` moves to the right.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        expr: LinExpr,
        sense: ConstraintSense,
        rhs: f64,
    ) -> Result<()> {
        let name = name.into();
        let terms = expr.compacted();
        if let Some(&(v, _)) = terms.iter().find(|(v, _)| v.0 >= self.variables.len()) {
            return Err(Error::Model(format!(
                "constraint `{name}` references unregistered variable {}",
                v.0
            )));
        }
        if !rhs.is_finite() || terms.iter().any(|(_, c)| !c.is_finite()) {
            return Err(Error::Model(format!("constraint `{name}` is not finite")));
        }
        self.constraints.push(Constraint {
            name,
            terms,
            sense,
            rhs: rhs - expr.constant,
        });
        Ok(())
    }

    pub fn set_objective(&mut self, expr: LinExpr) -> Result<()> {
        let terms = expr.compacted();
        if terms.iter().any(|(v, _)| v.0 >= self.variables.len()) {
            return Err(Error::Model("objective references unregistered variable".into()));
        }
        self.objective = Objective {
            terms,
            constant: expr.constant,
        };
        Ok(())
    }

    pub fn set_bounds(&mut self, id: VarId, lower: f64, upper: f64) -> Result<()> {
        let var = &mut self.variables[id.0];
        if lower > upper || (var.kind == VarKind::Binary && (lower < 0.0 || upper > 1.0)) {
            return Err(Error::Model(format!(
                "invalid bounds [{lower}, {upper}] for `{}`",
                var.name
            )));
        }
        var.lower = lower;
        var.upper = upper;
        Ok(())
    }

    /// Re-checks the structural invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.variables.len();
        for v in &self.variables {
            if v.lower > v.upper {
                return Err(Error::Model(format!("`{}` has lower > upper", v.name)));
            }
            if v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(Error::Model(format!("binary `{}` outside [0, 1]", v.name)));
            }
        }
        let dangling = self
            .constraints
            .iter()
            .flat_map(|c| c.terms.iter())
            .chain(self.objective.terms.iter())
            .any(|(v, _)| v.0 >= n);
        if dangling {
            return Err(Error::Model("unregistered variable referenced".into()));
        }
        Ok(())
    }

    /// Lists every row, bound and integrality requirement violated by more
    /// than [`FEASIBILITY_TOL`]. Bounds are reported as `bound:<var>` and
    /// integrality as `integrality:<var>`.
    pub fn evaluate_constraints(&self, point: &[f64]) -> Result<Vec<Violation>> {
        if point.len() < self.variables.len() {
            let missing = &self.variables[point.len()].name;
            return Err(Error::MissingVariable(missing.clone()));
        }
        if let Some(i) = point[..self.variables.len()].iter().position(|x| x.is_nan()) {
            return Err(Error::MissingVariable(self.variables[i].name.clone()));
        }
        let mut out = Vec::new();
        for (i, v) in self.variables.iter().enumerate() {
            let x = point[i];
            let bound = (v.lower - x).max(x - v.upper).max(0.0);
            if bound > FEASIBILITY_TOL {
                out.push(Violation {
                    name: format!("bound:{}", v.name),
                    magnitude: bound,
                });
            }
            if v.kind == VarKind::Binary {
                let frac = (x - x.round()).abs();
                if frac > FEASIBILITY_TOL {
                    out.push(Violation {
                        name: format!("integrality:{}", v.name),
                        magnitude: frac,
                    });
                }
            }
        }
        for c in &self.constraints {
            let viol = c.violation(point);
            if viol > FEASIBILITY_TOL {
                out.push(Violation {
                    name: c.name.clone(),
                    magnitude: viol,
                });
            }
        }
        Ok(out)
    }

    /// Like [`ModelIR::evaluate_constraints`] but keyed by variable name.
    pub fn evaluate_named(&self, point: &HashMap<String, f64>) -> Result<Vec<Violation>> {
        let dense = self
            .variables
            .iter()
            .map(|v| {
                point
                    .get(&v.name)
                    .copied()
                    .ok_or_else(|| Error::MissingVariable(v.name.clone()))
            })
            .collect::<Result<Vec<f64>>>()?;
        self.evaluate_constraints(&dense)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_var(upper_row: f64) -> (ModelIR, VarId) {
        let mut m = ModelIR::new();
        let x = m.continuous("x", 0.0, 10.0).unwrap();
        m.add_constraint("cap", LinExpr::new().term(x, 1.0), ConstraintSense::Le, upper_row)
            .unwrap();
        m.set_objective(LinExpr::new().term(x, 1.0)).unwrap();
        (m, x)
    }

    #[test]
    fn feasible_point_has_no_violations() {
        let (m, _) = one_var(3.0);
        assert!(m.evaluate_constraints(&[2.0]).unwrap().is_empty());
    }

    #[test]
    fn row_violation_is_measured() {
        let (m, _) = one_var(3.0);
        let v = m.evaluate_constraints(&[4.0]).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].name, "cap");
        assert!((v[0].magnitude - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fractional_binary_is_reported() {
        let mut m = ModelIR::new();
        m.binary("b").unwrap();
        let v = m.evaluate_constraints(&[0.5]).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].name, "integrality:b");
        assert!((v[0].magnitude - 0.5).abs() < 1e-12);
    }

    #[test]
    fn missing_values_are_an_error() {
        let (m, _) = one_var(3.0);
        assert!(matches!(
            m.evaluate_constraints(&[]),
            Err(Error::MissingVariable(name)) if name == "x"
        ));
        assert!(matches!(
            m.evaluate_named(&HashMap::new()),
            Err(Error::MissingVariable(_))
        ));
    }

    #[test]
    fn structural_errors_are_caught() {
        let mut m = ModelIR::new();
        m.continuous("x", 0.0, 1.0).unwrap();
        assert!(m.continuous("x", 0.0, 1.0).is_err());
        assert!(m.continuous("y", 2.0, 1.0).is_err());
        assert!(m.add_var("b", -1.0, 1.0, VarKind::Binary).is_err());
        let ghost = VarId(7);
        assert!(m
            .add_constraint("bad", LinExpr::new().term(ghost, 1.0), ConstraintSense::Le, 0.0)
            .is_err());
    }

    #[test]
    fn repeated_terms_are_merged_and_constants_move_right() {
        let mut m = ModelIR::new();
        let x = m.continuous("x", 0.0, 1.0).unwrap();
        let expr = LinExpr::new().term(x, 1.0).term(x, 2.0).constant(4.0);
        m.add_constraint("c", expr, ConstraintSense::Le, 10.0).unwrap();
        let c = &m.constraints()[0];
        assert_eq!(c.terms, vec![(x, 3.0)]);
        assert_eq!(c.rhs, 6.0);
    }
}
