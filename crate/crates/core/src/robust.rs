//! Robust treatment of the imbalance-price direction.
//!
//! For each scenario an adversary picks at most `gamma` hours in which the
//! system deviates against the facility, turning the imbalance term
//! `lambda * kappa * |d|` into a loss. The inner maximisation is replaced by
//! its LP dual (`omega`, `z`) and `|d|` by `y`, pinned to the absolute value
//! through the linearised KKT conditions of `min y s.t. y >= d, y >= -d`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::facility::VariableRegistry;
use crate::instance::Instance;
use crate::model::{ConstraintSense::*, LinExpr, ModelIR, VarId};
use crate::solution::Solution;

const INF: f64 = f64::INFINITY;

#[derive(Debug, Clone, Default)]
pub struct RobustVars {
    /// Dual of the budget row, per scenario.
    pub omega: Vec<VarId>,
    /// The remaining handles are indexed `[s][t]`.
    pub z: Vec<Vec<VarId>>,
    pub y: Vec<Vec<VarId>>,
    pub mu1: Vec<Vec<VarId>>,
    pub mu2: Vec<Vec<VarId>>,
    pub xd1: Vec<Vec<VarId>>,
    pub xd2: Vec<Vec<VarId>>,
    /// Big-M of the `d >= y` complementarity row, `[s][t]`, MWh.
    pub m_pos: Vec<Vec<f64>>,
    /// Big-M of the `-d >= y` complementarity row, `[s][t]`, MWh.
    pub m_neg: Vec<Vec<f64>>,
    /// Big-M for the multiplier rows.
    pub m_mu: f64,
}

/// Rows added per (period, scenario) by [`apply_robust_objective`].
pub const ROBUST_ROWS_PER_CELL: usize = 8;

/// Bounds on the deviation `d[t,s]` implied by the facility limits, MWh.
///
/// The deviation is the PV surprise plus the balancing adjustments: at most
/// `2·P_bat` from the battery (cancelling a scheduled discharge and charging
/// instead) and `P_el` from the electrolyzer. Both ends are also capped by
/// the grid limits on delivery and position.
pub fn deviation_bounds(instance: &Instance, t: usize, s: usize) -> (f64, f64) {
    let dt = instance.time.dt;
    let grid = 2.0 * instance.grid.connection_limit * dt;
    let flex = 2.0 * instance.battery.rated_power + instance.electrolyzer.rated_power;
    let forecast = instance.pv.forecast[t];
    let realised = instance.pv.scenarios[s][t];
    let lo = ((-forecast - flex) * dt).max(-grid);
    let hi = ((realised - forecast + flex) * dt).min(grid);
    (lo, hi)
}

/// Rows added per (period, scenario) by [`add_sign_split`].
pub const SIGN_SPLIT_ROWS_PER_CELL: usize = 5;

/// Adds the dual variables and KKT rows and sets the final objective.
///
/// The complementarity big-Ms are per cell, from [`deviation_bounds`]:
/// `d - |d| >= 2·lo` and `-d - |d| >= -2·hi`.
pub fn apply_robust_objective(
    model: &mut ModelIR,
    reg: &VariableRegistry,
    instance: &Instance,
) -> Result<RobustVars> {
    let kappa = instance.imbalance.kappa;
    let gamma = instance.imbalance.gamma as f64;
    let prices = &instance.prices;
    let hydrogen_margin =
        prices.hydrogen_price - prices.water_price * instance.electrolyzer.water_per_kg;
    // mu1 + mu2 = 1 with both non-negative.
    let m_mu = 1.0;

    let mut objective = LinExpr::new();
    for (t, &mp) in reg.first.mp.iter().enumerate() {
        objective.add(mp, prices.da_price[t]);
    }

    let mut rv = RobustVars {
        m_mu,
        ..Default::default()
    };
    for (s, sc) in reg.scenarios.iter().enumerate() {
        let pi = instance.pv.probabilities[s];
        let omega = model.continuous(format!("omega[{s}]"), 0.0, INF)?;
        objective.add(omega, -pi * gamma);
        let (mut zs, mut ys, mut m1s, mut m2s, mut x1s, mut x2s) =
            (vec![], vec![], vec![], vec![], vec![], vec![]);
        let (mut mps, mut mns) = (vec![], vec![]);
        for t in 0..reg.n_periods() {
            let idx = format!("{t},{s}");
            let lambda = prices.da_price[t];
            let d = sc.d[t];
            let z = model.continuous(format!("z[{idx}]"), 0.0, INF)?;
            let (lo, hi) = deviation_bounds(instance, t, s);
            let m_pos = 2.0 * (-lo).max(0.0);
            let m_neg = 2.0 * hi.max(0.0);
            let y = model.continuous(format!("y[{idx}]"), 0.0, hi.max(-lo).max(0.0))?;
            let mu1 = model.continuous(format!("mu1[{idx}]"), 0.0, INF)?;
            let mu2 = model.continuous(format!("mu2[{idx}]"), 0.0, INF)?;
            let xd1 = model.binary(format!("xd1[{idx}]"))?;
            let xd2 = model.binary(format!("xd2[{idx}]"))?;

            objective.add(d, pi * lambda);
            objective.add(sc.hydrogen[t], pi * hydrogen_margin);
            objective.add(z, -pi);
            objective.add(y, pi * lambda * kappa);

            model.add_constraint(
                format!("dual_budget[{idx}]"),
                LinExpr::new()
                    .term(omega, 1.0)
                    .term(z, 1.0)
                    .term(y, -2.0 * lambda * kappa),
                Ge,
                0.0,
            )?;
            model.add_constraint(
                format!("abs_pos[{idx}]"),
                LinExpr::new().term(y, 1.0).term(d, -1.0),
                Ge,
                0.0,
            )?;
            model.add_constraint(
                format!("abs_neg[{idx}]"),
                LinExpr::new().term(y, 1.0).term(d, 1.0),
                Ge,
                0.0,
            )?;
            model.add_constraint(
                format!("kkt_stat[{idx}]"),
                LinExpr::new().term(mu1, 1.0).term(mu2, 1.0),
                Eq,
                1.0,
            )?;
            // mu1 > 0 only if y = d.
            model.add_constraint(
                format!("kkt_pos[{idx}]"),
                LinExpr::new().term(d, 1.0).term(y, -1.0).term(xd1, -m_pos),
                Ge,
                -m_pos,
            )?;
            model.add_constraint(
                format!("kkt_mu1[{idx}]"),
                LinExpr::new().term(mu1, 1.0).term(xd1, -m_mu),
                Le,
                0.0,
            )?;
            // mu2 > 0 only if y = -d.
            model.add_constraint(
                format!("kkt_neg[{idx}]"),
                LinExpr::new().term(d, -1.0).term(y, -1.0).term(xd2, -m_neg),
                Ge,
                -m_neg,
            )?;
            model.add_constraint(
                format!("kkt_mu2[{idx}]"),
                LinExpr::new().term(mu2, 1.0).term(xd2, -m_mu),
                Le,
                0.0,
            )?;
            mps.push(m_pos);
            mns.push(m_neg);
            zs.push(z);
            ys.push(y);
            m1s.push(mu1);
            m2s.push(mu2);
            x1s.push(xd1);
            x2s.push(xd2);
        }
        rv.omega.push(omega);
        rv.z.push(zs);
        rv.y.push(ys);
        rv.mu1.push(m1s);
        rv.mu2.push(m2s);
        rv.xd1.push(x1s);
        rv.xd2.push(x2s);
        rv.m_pos.push(mps);
        rv.m_neg.push(mns);
    }
    model.set_objective(objective)?;
    Ok(rv)
}

/// Positive and negative parts of each deviation, `[s][t]`.
#[derive(Debug, Clone, Default)]
pub struct SignSplitVars {
    pub d_pos: Vec<Vec<VarId>>,
    pub d_neg: Vec<Vec<VarId>>,
}

/// Tightens the absolute-value linearisation without changing its integer
/// solutions: exactly one sign binary is active, and `d`, `y` are split
/// into a positive and a negative part, each switched by its sign binary.
/// This is the convex hull of `y = |d|` on `[lo, hi]` for fixed signs and
/// shrinks the branch-and-bound tree considerably.
pub fn add_sign_split(
    model: &mut ModelIR,
    reg: &VariableRegistry,
    robust: &RobustVars,
    instance: &Instance,
) -> Result<SignSplitVars> {
    let mut out = SignSplitVars::default();
    for (s, sc) in reg.scenarios.iter().enumerate() {
        let (mut dps, mut dns) = (vec![], vec![]);
        for t in 0..reg.n_periods() {
            let idx = format!("{t},{s}");
            let (lo, hi) = deviation_bounds(instance, t, s);
            let (up, down) = (hi.max(0.0), (-lo).max(0.0));
            let (d, y) = (sc.d[t], robust.y[s][t]);
            let (xd1, xd2) = (robust.xd1[s][t], robust.xd2[s][t]);
            let dp = model.continuous(format!("d_pos[{idx}]"), 0.0, up)?;
            let dn = model.continuous(format!("d_neg[{idx}]"), 0.0, down)?;
            model.add_constraint(
                format!("sign_one[{idx}]"),
                LinExpr::new().term(xd1, 1.0).term(xd2, 1.0),
                Eq,
                1.0,
            )?;
            model.add_constraint(
                format!("d_split[{idx}]"),
                LinExpr::new().term(d, 1.0).term(dp, -1.0).term(dn, 1.0),
                Eq,
                0.0,
            )?;
            model.add_constraint(
                format!("y_split[{idx}]"),
                LinExpr::new().term(y, 1.0).term(dp, -1.0).term(dn, -1.0),
                Eq,
                0.0,
            )?;
            model.add_constraint(
                format!("d_pos_on[{idx}]"),
                LinExpr::new().term(dp, 1.0).term(xd1, -up),
                Le,
                0.0,
            )?;
            model.add_constraint(
                format!("d_neg_on[{idx}]"),
                LinExpr::new().term(dn, 1.0).term(xd2, -down),
                Le,
                0.0,
            )?;
            dps.push(dp);
            dns.push(dn);
        }
        out.d_pos.push(dps);
        out.d_neg.push(dns);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerWorstCase {
    /// `max_b sum_t lambda_t * kappa * |d_t| * (2 b_t - 1)`, EUR.
    pub value: f64,
    /// Hours settled in the unfavourable direction.
    pub b: Vec<bool>,
}

/// Solves the inner adversarial problem of one scenario in closed form.
///
/// The adversary marks the `gamma` hours with the largest positive stake
/// `lambda_t * kappa * |d_t|` as unfavourable (ties go to the earlier hour);
/// every other hour counts as favourable. Hours with a non-positive stake
/// are never marked since marking them cannot raise the value.
pub fn inner_worst_case(
    deviations: &[f64],
    da_price: &[f64],
    kappa: f64,
    gamma: usize,
) -> InnerWorstCase {
    let stakes: Vec<f64> = deviations
        .iter()
        .zip(da_price)
        .map(|(d, l)| l * kappa * d.abs())
        .collect();
    let mut order: Vec<usize> = (0..stakes.len()).collect();
    order.sort_by(|&a, &b| stakes[b].total_cmp(&stakes[a]).then(a.cmp(&b)));
    let mut b = vec![false; stakes.len()];
    for &t in order.iter().take(gamma) {
        if stakes[t] > 0.0 {
            b[t] = true;
        }
    }
    let value = stakes
        .iter()
        .zip(&b)
        .map(|(&c, &u)| if u { c } else { -c })
        .sum();
    InnerWorstCase { value, b }
}

/// Re-targets a schedule to budget `gamma`: sets `y = |d|`, the sign
/// binaries and multipliers, and the optimal dual `(omega, z)` of each
/// scenario's inner problem. The dispatch is untouched, so the result is a
/// feasible point of the model for `gamma` whose objective equals the
/// worst-case profit of the dispatch.
pub fn refit_duals(solution: &mut Solution, instance: &Instance, gamma: usize) {
    let kappa = instance.imbalance.kappa;
    let prices = &instance.prices.da_price;
    solution.gamma = gamma;
    for sc in &mut solution.scenarios {
        let n = sc.d.len();
        for t in 0..n {
            let d = sc.d[t];
            sc.y[t] = d.abs();
            let positive = d >= 0.0;
            sc.xd1[t] = if positive { 1.0 } else { 0.0 };
            sc.xd2[t] = 1.0 - sc.xd1[t];
            sc.mu1[t] = sc.xd1[t];
            sc.mu2[t] = sc.xd2[t];
        }
        // omega is the (gamma+1)-th largest positive stake, z the excess.
        let mut stakes: Vec<f64> = (0..n)
            .map(|t| (2.0 * prices[t] * kappa * sc.y[t]).max(0.0))
            .collect();
        let excess_of = stakes.clone();
        stakes.sort_by(|a, b| b.total_cmp(a));
        let omega = stakes.get(gamma).copied().unwrap_or(0.0);
        sc.omega = omega;
        for t in 0..n {
            sc.z[t] = (excess_of[t] - omega).max(0.0);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DualityIssue {
    /// `y` differs from `|d|` at (t, s).
    AbsMismatch {
        t: usize,
        s: usize,
        y: f64,
        abs_d: f64,
    },
    /// The robust part of the objective differs from minus the inner worst case.
    DualityGap {
        scenario: usize,
        embedded: f64,
        expected: f64,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub issues: Vec<DualityIssue>,
}

impl DualityReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }

    /// Converts the first duality gap (or abs mismatch) into an error.
    pub fn into_result(self) -> Result<()> {
        match self.issues.into_iter().next() {
            None => Ok(()),
            Some(DualityIssue::DualityGap {
                scenario,
                embedded,
                expected,
            }) => Err(Error::DualityGap {
                scenario,
                magnitude: (embedded - expected).abs(),
            }),
            Some(DualityIssue::AbsMismatch { s, y, abs_d, .. }) => Err(Error::DualityGap {
                scenario: s,
                magnitude: (y - abs_d).abs(),
            }),
        }
    }
}

/// Robust contribution the solver embedded in the objective for scenario `s`:
/// `sum_t (lambda kappa y - z) - gamma * omega`.
pub fn embedded_robust_term(solution: &Solution, instance: &Instance, s: usize) -> f64 {
    let sc = &solution.scenarios[s];
    let kappa = instance.imbalance.kappa;
    let per_hour: f64 = (0..instance.n_periods())
        .map(|t| instance.prices.da_price[t] * kappa * sc.y[t] - sc.z[t])
        .sum();
    per_hour - solution.gamma as f64 * sc.omega
}

/// Checks strong duality of every scenario's robust subproblem and the
/// absolute-value linearisation. `tol` is relative, floored at 1 EUR / 1 MWh.
pub fn verify_duality(solution: &Solution, instance: &Instance, tol: f64) -> DualityReport {
    let mut issues = Vec::new();
    let kappa = instance.imbalance.kappa;
    let prices = &instance.prices.da_price;
    for (s, sc) in solution.scenarios.iter().enumerate() {
        for t in 0..instance.n_periods() {
            let abs_d = sc.d[t].abs();
            if (sc.y[t] - abs_d).abs() > tol * abs_d.max(1.0) {
                issues.push(DualityIssue::AbsMismatch {
                    t,
                    s,
                    y: sc.y[t],
                    abs_d,
                });
            }
        }
        let embedded = embedded_robust_term(solution, instance, s);
        let expected = -inner_worst_case(&sc.d, prices, kappa, solution.gamma).value;
        let scale: f64 = sc
            .d
            .iter()
            .zip(prices)
            .map(|(d, l)| (l * kappa * d).abs())
            .sum::<f64>()
            .max(1.0);
        if (embedded - expected).abs() > tol * scale {
            issues.push(DualityIssue::DualityGap {
                scenario: s,
                embedded,
                expected,
            });
        }
    }
    DualityReport { issues }
}
