//! Independent recomputation of solver results.
//!
//! Nothing here touches the MILP: [`recompute_profit`] evaluates the
//! two-stage profit directly from a schedule, and [`enumerate_tiny`]
//! searches a grid of schedules exhaustively on micro-instances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::robust::inner_worst_case;
use crate::solution::Solution;

/// Enumeration stops before starting when its estimated size exceeds this.
pub const NODE_CAP: u128 = 10_000_000;
pub const DEFAULT_GRID_STEP: f64 = 0.5;

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfitBreakdown {
    pub da_revenue: f64,
    pub hydrogen_revenue_expected: f64,
    pub water_cost_expected: f64,
    /// Settlement of deviations at the imbalance price, probability weighted.
    pub imbalance_revenue_expected: f64,
    pub total: f64,
}

impl ProfitBreakdown {
    /// Hydrogen sales net of water.
    pub fn hydrogen_net_expected(&self) -> f64 {
        self.hydrogen_revenue_expected - self.water_cost_expected
    }
}

/// Evaluates the profit of `solution` when the system direction in hour
/// `t` of scenario `s` is adverse to the facility iff `b[s][t]`.
///
/// A favourable hour settles the deviation at `λ·d + λκ|d|`, an adverse one
/// at `λ·d − λκ|d|`.
pub fn recompute_profit(
    solution: &Solution,
    instance: &Instance,
    b: &[Vec<bool>],
) -> Result<ProfitBreakdown> {
    solution.check_shape(instance)?;
    if b.len() != instance.n_scenarios() || b.iter().any(|row| row.len() != instance.n_periods()) {
        return Err(Error::IncompleteSolution(
            "direction flags do not cover every (t, s)".into(),
        ));
    }
    let prices = &instance.prices;
    let kappa = instance.imbalance.kappa;
    let da_revenue = solution
        .first_stage
        .mp
        .iter()
        .zip(&prices.da_price)
        .map(|(mp, l)| l * mp)
        .sum();
    let (mut hydrogen, mut water, mut imbalance) = (0.0, 0.0, 0.0);
    for ((sc, flags), pi) in solution.scenarios.iter().zip(b).zip(&instance.pv.probabilities) {
        let kg: f64 = sc.hydrogen.iter().sum();
        hydrogen += pi * prices.hydrogen_price * kg;
        water += pi * prices.water_price * instance.electrolyzer.water_per_kg * kg;
        for ((d, l), &adverse) in sc.d.iter().zip(&prices.da_price).zip(flags) {
            let sign = if adverse { -1.0 } else { 1.0 };
            imbalance += pi * (l * d + sign * l * kappa * d.abs());
        }
    }
    Ok(ProfitBreakdown {
        da_revenue,
        hydrogen_revenue_expected: hydrogen,
        water_cost_expected: water,
        imbalance_revenue_expected: imbalance,
        total: da_revenue + hydrogen - water + imbalance,
    })
}

/// Adverse-hour flags chosen by the inner worst case of every scenario at
/// the solution's budget.
pub fn worst_case_flags(solution: &Solution, instance: &Instance) -> Vec<Vec<bool>> {
    solution
        .scenarios
        .iter()
        .map(|sc| {
            inner_worst_case(
                &sc.d,
                &instance.prices.da_price,
                instance.imbalance.kappa,
                solution.gamma,
            )
            .b
        })
        .collect()
}

/// Profit under the worst case the model protects against. For an optimal
/// solve this reproduces the solver objective.
pub fn worst_case_profit(solution: &Solution, instance: &Instance) -> Result<ProfitBreakdown> {
    recompute_profit(solution, instance, &worst_case_flags(solution, instance))
}

/// Day-ahead part of an enumerated schedule.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TinyFirstStage {
    pub mp: Vec<f64>,
    pub ch_da: Vec<f64>,
    pub dis_da: Vec<f64>,
    pub el_da: Vec<f64>,
    pub x_e: Vec<bool>,
}

/// Recourse of one scenario in an enumerated schedule. Battery and
/// electrolyzer powers are the actual ones; balancing adjustments are their
/// differences to the day-ahead schedule.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TinyRecourse {
    pub charge: Vec<f64>,
    pub discharge: Vec<f64>,
    pub el: Vec<f64>,
    pub res: Vec<f64>,
    pub d: Vec<f64>,
    pub soe: Vec<f64>,
    pub hydrogen: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TinySchedule {
    pub first_stage: TinyFirstStage,
    pub scenarios: Vec<TinyRecourse>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Enumeration {
    /// `None` when no grid point is feasible.
    pub best_profit: Option<f64>,
    pub best_schedule: Option<TinySchedule>,
    /// Upper bound on the number of schedules considered.
    pub nodes: u128,
    /// Per unit of grid step, the most profit a schedule off the grid can
    /// gain over its nearest grid neighbour; see [`lipschitz_constant`].
    pub lipschitz: f64,
}

/// Sensitivity of the profit to moving every continuous power decision by
/// one MW:
///
/// `C = Δt · Σ_t [ 7·(1 + κ)·|λ_t| + 2·h ]`, with
/// `h = |λ^H − λ^W·η^w| · α / ϑ` the hydrogen margin per MWh.
///
/// Each hour's deviation depends on seven power terms (three day-ahead
/// schedules, actual charge, discharge and electrolyzer power, PV use), each
/// priced at most at `(1 + κ)·|λ_t|`; the day-ahead and actual electrolyzer
/// powers each move the hydrogen yield by at most `h`.
pub fn lipschitz_constant(instance: &Instance) -> f64 {
    let p = &instance.prices;
    let e = &instance.electrolyzer;
    let h = (p.hydrogen_price - p.water_price * e.water_per_kg).abs() * e.alpha / e.power_per_kg;
    let k = instance.imbalance.kappa;
    instance.time.dt
        * p.da_price
            .iter()
            .map(|l| 7.0 * (1.0 + k) * l.abs() + 2.0 * h)
            .sum::<f64>()
}

/// Grid `0, step, 2·step, ...` up to `max` (inclusive within tolerance).
fn grid(max: f64, step: f64) -> Vec<f64> {
    let n = (max / step + TOL).floor() as usize;
    (0..=n).map(|i| i as f64 * step).collect()
}

#[derive(Debug, Clone, Copy)]
struct DayAhead {
    ch: f64,
    dis: f64,
    el: f64,
    on: bool,
}

#[derive(Debug, Clone, Copy)]
struct Action {
    charge: f64,
    discharge: f64,
    el: f64,
}

/// Exhaustive search on micro-instances.
///
/// Day-ahead battery and electrolyzer powers and the actual recourse powers
/// are gridded at `grid_step`; every binary is enumerated. PV use is not
/// gridded: with everything else fixed, the profit of a scenario is monotone
/// in the hour's deviation (increasing for `λ_t ≥ 0`, decreasing otherwise),
/// so the best PV use is the largest (smallest) admissible value. Charging
/// segments are filled cheapest slope first, which maximises the next
/// hour's charge ability; the initial state is split in index order.
pub fn enumerate_tiny(instance: &Instance, grid_step: f64) -> Result<Enumeration> {
    instance.validate()?;
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(Error::validation("grid_step", "must be positive"));
    }
    let n = instance.n_periods();
    let bat = &instance.battery;
    let ely = &instance.electrolyzer;
    for (field, rated) in [
        ("battery.rated_power", bat.rated_power),
        ("electrolyzer.rated_power", ely.rated_power),
    ] {
        let ratio = rated / grid_step;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return Err(Error::validation(field, "must be a multiple of grid_step"));
        }
    }

    let powers_b = grid(bat.rated_power, grid_step);
    let powers_e = grid(ely.rated_power, grid_step);
    let mut day_ahead = Vec::new();
    for &ch in &powers_b {
        for &dis in &powers_b {
            if ch > 0.0 && dis > 0.0 {
                continue;
            }
            for &el in &powers_e {
                for on in [false, true] {
                    day_ahead.push(DayAhead { ch, dis, el, on });
                }
            }
        }
    }
    let mut actions = Vec::new();
    for &charge in &powers_b {
        for &discharge in &powers_b {
            for &el in &powers_e {
                actions.push(Action {
                    charge,
                    discharge,
                    el,
                });
            }
        }
    }

    let per_period = day_ahead.len() as u128 * actions.len() as u128;
    let nodes = per_period
        .checked_pow(n as u32)
        .and_then(|x| x.checked_mul(instance.n_scenarios() as u128))
        .unwrap_or(u128::MAX);
    if nodes > NODE_CAP {
        return Err(Error::TooLarge {
            nodes,
            cap: NODE_CAP,
        });
    }

    let n_first = (day_ahead.len() as u128).pow(n as u32) as usize;
    let search = Search {
        instance,
        actions: &actions,
    };
    let best = (0..n_first)
        .into_par_iter()
        .filter_map(|code| {
            let plan: Vec<DayAhead> = (0..n)
                .scan(code, |rest, _| {
                    let i = *rest % day_ahead.len();
                    *rest /= day_ahead.len();
                    Some(day_ahead[i])
                })
                .collect();
            search.evaluate_plan(&plan).map(|(v, sched)| (code, v, sched))
        })
        .reduce_with(|a, b| {
            // Deterministic: higher profit, then lower plan index.
            if b.1 > a.1 + TOL || ((b.1 - a.1).abs() <= TOL && b.0 < a.0) {
                b
            } else {
                a
            }
        });

    Ok(Enumeration {
        best_profit: best.as_ref().map(|b| b.1),
        best_schedule: best.map(|b| b.2),
        nodes,
        lipschitz: lipschitz_constant(instance),
    })
}

struct Search<'a> {
    instance: &'a Instance,
    actions: &'a [Action],
}

impl Search<'_> {
    /// Best expected profit for a fixed day-ahead plan, or `None` when some
    /// scenario has no feasible recourse.
    fn evaluate_plan(&self, plan: &[DayAhead]) -> Option<(f64, TinySchedule)> {
        let inst = self.instance;
        let dt = inst.time.dt;
        let grid = inst.grid.connection_limit * dt;
        let mut first = TinyFirstStage::default();
        for (t, p) in plan.iter().enumerate() {
            let mp = (inst.pv.forecast[t] + p.dis - p.ch - p.el) * dt;
            if mp.abs() > grid + TOL {
                return None;
            }
            first.mp.push(mp);
            first.ch_da.push(p.ch);
            first.dis_da.push(p.dis);
            first.el_da.push(p.el);
            first.x_e.push(p.on);
        }
        let da: f64 = first
            .mp
            .iter()
            .zip(&inst.prices.da_price)
            .map(|(m, l)| m * l)
            .sum();
        let mut total = da;
        let mut scenarios = Vec::with_capacity(inst.n_scenarios());
        for s in 0..inst.n_scenarios() {
            let mut best: Option<(f64, TinyRecourse)> = None;
            let mut path = TinyRecourse::default();
            self.recurse(plan, &first.mp, s, 0, inst.battery.initial_soe, &mut path, &mut best);
            let (value, recourse) = best?;
            total += inst.pv.probabilities[s] * value;
            scenarios.push(recourse);
        }
        Some((total, TinySchedule {
            first_stage: first,
            scenarios,
        }))
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        &self,
        plan: &[DayAhead],
        mp: &[f64],
        s: usize,
        t: usize,
        soe_prev: f64,
        path: &mut TinyRecourse,
        best: &mut Option<(f64, TinyRecourse)>,
    ) {
        let inst = self.instance;
        if t == plan.len() {
            let value = self.scenario_value(path);
            if best.as_ref().map_or(true, |(b, _)| value > *b + TOL) {
                *best = Some((value, path.clone()));
            }
            return;
        }
        let bat = &inst.battery;
        let ely = &inst.electrolyzer;
        let dt = inst.time.dt;
        let grid = inst.grid.connection_limit * dt;
        let p = plan[t];
        let charge_room = if bat.n_segments() == 0 {
            f64::INFINITY
        } else {
            let prev = if t == 0 {
                bat.fill_segments_in_order(soe_prev)
            } else {
                fill_cheapest_first(soe_prev, &bat.segment_widths(), &bat.segment_slopes())
            };
            let used: f64 = prev.iter().zip(bat.segment_slopes()).map(|(e, k)| e * k).sum();
            bat.charge_curve_f[0] * bat.capacity - used
        };
        for a in self.actions {
            if !battery_feasible(p, a, bat.rated_power) {
                continue;
            }
            if dt * bat.eta * a.charge > charge_room + TOL {
                continue;
            }
            let soe = soe_prev + dt * (bat.eta * a.charge - a.discharge / bat.eta);
            if soe < -TOL || soe > bat.capacity + TOL {
                continue;
            }
            let (lo, hi) = if p.on {
                (ely.min_stable_fraction * ely.rated_power, ely.rated_power)
            } else {
                (0.0, 0.0)
            };
            if a.el < lo - TOL || a.el > hi + TOL {
                continue;
            }
            // Delivery without PV, then the admissible range of PV use.
            let base = (a.discharge - a.charge - a.el) * dt;
            let avail = inst.pv.scenarios[s][t];
            let res_hi = avail.min((grid - base) / dt);
            let res_lo = ((-grid - base) / dt).max(0.0);
            if res_lo > res_hi + TOL {
                continue;
            }
            let res = if inst.prices.da_price[t] >= 0.0 {
                res_hi
            } else {
                res_lo
            };
            let r = base + res * dt;
            let on = if p.on { 1.0 } else { 0.0 };
            let kg = (ely.alpha * a.el + ely.beta * ely.rated_power * on) / ely.power_per_kg;

            path.charge.push(a.charge);
            path.discharge.push(a.discharge);
            path.el.push(a.el);
            path.res.push(res);
            path.d.push(r - mp[t]);
            path.soe.push(soe.clamp(0.0, bat.capacity));
            path.hydrogen.push(kg);
            self.recurse(plan, mp, s, t + 1, soe.clamp(0.0, bat.capacity), path, best);
            path.charge.pop();
            path.discharge.pop();
            path.el.pop();
            path.res.pop();
            path.d.pop();
            path.soe.pop();
            path.hydrogen.pop();
        }
    }

    fn scenario_value(&self, path: &TinyRecourse) -> f64 {
        let inst = self.instance;
        let p = &inst.prices;
        let margin = p.hydrogen_price - p.water_price * inst.electrolyzer.water_per_kg;
        let linear: f64 = path
            .d
            .iter()
            .zip(&path.hydrogen)
            .zip(&p.da_price)
            .map(|((d, kg), l)| l * d + margin * kg)
            .sum();
        linear - inner_worst_case(&path.d, &p.da_price, inst.imbalance.kappa, inst.imbalance.gamma).value
    }
}

/// Whether actual powers `a` are reachable from the day-ahead plan `p`
/// with balancing adjustments in a single direction group.
fn battery_feasible(p: DayAhead, a: &Action, rated: f64) -> bool {
    if a.charge > rated + TOL || a.discharge > rated + TOL {
        return false;
    }
    let ch_up = (a.charge - p.ch).max(0.0);
    let ch_down = (p.ch - a.charge).max(0.0);
    let dis_up = (a.discharge - p.dis).max(0.0);
    let dis_down = (p.dis - a.discharge).max(0.0);
    let group_a = ch_up + dis_down > TOL;
    let group_b = ch_down + dis_up > TOL;
    !(group_a && group_b)
}

fn fill_cheapest_first(soe: f64, widths: &[f64], slopes: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..widths.len()).collect();
    order.sort_by(|&a, &b| slopes[a].total_cmp(&slopes[b]).then(a.cmp(&b)));
    let mut remaining = soe.max(0.0);
    let mut fill = vec![0.0; widths.len()];
    for j in order {
        let take = remaining.min(widths[j]);
        fill[j] = take;
        remaining -= take;
    }
    fill
}
