//! Physical and market constraints of the PV-battery-electrolyzer facility.
//!
//! Index conventions: `t` is the period (0-based), `s` the PV scenario and
//! `j` the charging-curve segment. Variable names follow `symbol[t,s,j]`.
//!
//! First-stage (day-ahead) decisions are the market position `mp`, the
//! scheduled battery powers `ch_da`/`dis_da`, the scheduled electrolyzer
//! power `el_da` and the on/off and charge/discharge binaries. Everything
//! else is scenario recourse.

use crate::error::{Error, Result};
use crate::instance::{BatteryParams, ElectrolyzerParams, Instance};
use crate::model::{ConstraintSense::*, LinExpr, ModelIR, VarId};

const INF: f64 = f64::INFINITY;

/// Day-ahead decisions, one handle per period.
#[derive(Debug, Clone, Default)]
pub struct FirstStageVars {
    pub mp: Vec<VarId>,
    pub ch_da: Vec<VarId>,
    pub dis_da: Vec<VarId>,
    pub el_da: Vec<VarId>,
    /// Electrolyzer on/off.
    pub x_e: Vec<VarId>,
    /// 1 when the battery is scheduled to charge.
    pub x_b_da: Vec<VarId>,
}

/// Recourse decisions of one scenario, indexed by period.
#[derive(Debug, Clone, Default)]
pub struct RecourseVars {
    /// Deviation from the market position, MWh.
    pub d: Vec<VarId>,
    /// Realised delivery, MWh.
    pub r: Vec<VarId>,
    /// PV output actually used (the rest is curtailed), MW.
    pub res: Vec<VarId>,
    pub ch_b_plus: Vec<VarId>,
    pub ch_b_minus: Vec<VarId>,
    pub dis_b_plus: Vec<VarId>,
    pub dis_b_minus: Vec<VarId>,
    pub el_b_plus: Vec<VarId>,
    pub el_b_minus: Vec<VarId>,
    pub soe: Vec<VarId>,
    /// `[t][j]`; empty inner vectors for the simple battery model.
    pub soe_seg: Vec<Vec<VarId>>,
    /// Balancing direction of the battery.
    pub x_b_b: Vec<VarId>,
    /// kg
    pub hydrogen: Vec<VarId>,
    /// Actual electrolyzer power.
    pub el: Vec<VarId>,
    /// Power converted to hydrogen after losses.
    pub el_net: Vec<VarId>,
}

#[derive(Debug, Clone, Default)]
pub struct VariableRegistry {
    pub first: FirstStageVars,
    pub scenarios: Vec<RecourseVars>,
}

impl VariableRegistry {
    pub fn n_periods(&self) -> usize {
        self.first.mp.len()
    }

    pub fn n_scenarios(&self) -> usize {
        self.scenarios.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FacilityOptions {
    /// Use the SOE-dependent charging curve. When false the battery can
    /// charge at rated power regardless of its state of energy.
    pub accurate_charging: bool,
}

impl Default for FacilityOptions {
    fn default() -> Self {
        Self {
            accurate_charging: true,
        }
    }
}

/// Number of rows [`build_facility_with`] emits.
pub fn facility_constraint_count(
    n_periods: usize,
    n_scenarios: usize,
    n_segments: usize,
    accurate_charging: bool,
) -> usize {
    let per_scenario = if accurate_charging { 22 + n_segments } else { 20 };
    n_periods * (5 + n_scenarios * per_scenario)
}

pub fn build_facility(instance: &Instance) -> Result<(ModelIR, VariableRegistry)> {
    build_facility_with(instance, FacilityOptions::default())
}

pub fn build_facility_with(
    instance: &Instance,
    options: FacilityOptions,
) -> Result<(ModelIR, VariableRegistry)> {
    instance.validate()?;
    let mut model = ModelIR::new();
    let first = add_first_stage(&mut model, instance)?;
    let scenarios = (0..instance.n_scenarios())
        .map(|s| add_scenario(&mut model, instance, &first, s, options))
        .collect::<Result<Vec<_>>>()?;
    Ok((model, VariableRegistry { first, scenarios }))
}

fn add_first_stage(model: &mut ModelIR, inst: &Instance) -> Result<FirstStageVars> {
    let dt = inst.time.dt;
    let p_bat = inst.battery.rated_power;
    let p_el = inst.electrolyzer.rated_power;
    let grid = inst.grid.connection_limit * dt;
    let mut v = FirstStageVars::default();
    for t in 0..inst.n_periods() {
        let mp = model.continuous(format!("mp[{t}]"), -INF, INF)?;
        let ch = model.continuous(format!("ch_da[{t}]"), 0.0, p_bat)?;
        let dis = model.continuous(format!("dis_da[{t}]"), 0.0, p_bat)?;
        let el = model.continuous(format!("el_da[{t}]"), 0.0, p_el)?;
        let x_e = model.binary(format!("x_e[{t}]"))?;
        let x_b = model.binary(format!("x_b_da[{t}]"))?;

        // mp = (RES^p + dis - ch - el) * dt
        model.add_constraint(
            format!("position[{t}]"),
            LinExpr::new()
                .term(mp, 1.0)
                .term(dis, -dt)
                .term(ch, dt)
                .term(el, dt),
            Eq,
            inst.pv.forecast[t] * dt,
        )?;
        model.add_constraint(format!("grid_mp_up[{t}]"), LinExpr::new().term(mp, 1.0), Le, grid)?;
        model.add_constraint(format!("grid_mp_lo[{t}]"), LinExpr::new().term(mp, 1.0), Ge, -grid)?;
        // No simultaneous day-ahead charging and discharging.
        model.add_constraint(
            format!("da_dis_excl[{t}]"),
            LinExpr::new().term(dis, 1.0).term(x_b, p_bat),
            Le,
            p_bat,
        )?;
        model.add_constraint(
            format!("da_ch_excl[{t}]"),
            LinExpr::new().term(ch, 1.0).term(x_b, -p_bat),
            Le,
            0.0,
        )?;

        v.mp.push(mp);
        v.ch_da.push(ch);
        v.dis_da.push(dis);
        v.el_da.push(el);
        v.x_e.push(x_e);
        v.x_b_da.push(x_b);
    }
    Ok(v)
}

fn add_scenario(
    model: &mut ModelIR,
    inst: &Instance,
    first: &FirstStageVars,
    s: usize,
    options: FacilityOptions,
) -> Result<RecourseVars> {
    let dt = inst.time.dt;
    let bat = &inst.battery;
    let ely = &inst.electrolyzer;
    let eta = bat.eta;
    let p_bat = bat.rated_power;
    let p_el = ely.rated_power;
    let grid = inst.grid.connection_limit * dt;
    let widths = bat.segment_widths();
    let slopes = bat.segment_slopes();
    let initial_segments = bat.fill_segments_in_order(bat.initial_soe);
    let curve_head = bat.charge_curve_f[0] * bat.capacity;

    let mut v = RecourseVars::default();
    for t in 0..inst.n_periods() {
        let idx = format!("{t},{s}");
        let d = model.continuous(format!("d[{idx}]"), -INF, INF)?;
        let r = model.continuous(format!("r[{idx}]"), -INF, INF)?;
        let res = model.continuous(format!("res[{idx}]"), 0.0, INF)?;
        let ch_p = model.continuous(format!("ch_b_plus[{idx}]"), 0.0, INF)?;
        let ch_m = model.continuous(format!("ch_b_minus[{idx}]"), 0.0, INF)?;
        let dis_p = model.continuous(format!("dis_b_plus[{idx}]"), 0.0, INF)?;
        let dis_m = model.continuous(format!("dis_b_minus[{idx}]"), 0.0, INF)?;
        let el_p = model.continuous(format!("el_b_plus[{idx}]"), 0.0, p_el)?;
        let el_m = model.continuous(format!("el_b_minus[{idx}]"), 0.0, p_el)?;
        let soe = model.continuous(format!("soe[{idx}]"), 0.0, INF)?;
        let x_b_b = model.binary(format!("x_b_b[{idx}]"))?;
        let hydrogen = model.continuous(format!("hydrogen[{idx}]"), 0.0, INF)?;
        let el = model.continuous(format!("el[{idx}]"), 0.0, INF)?;
        let el_net = model.continuous(format!("el_net[{idx}]"), 0.0, INF)?;
        let segs = if options.accurate_charging {
            (0..widths.len())
                .map(|j| model.continuous(format!("soe_seg[{idx},{j}]"), 0.0, INF))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };

        let (mp, ch_da, dis_da, el_da) = (first.mp[t], first.ch_da[t], first.dis_da[t], first.el_da[t]);
        let x_e = first.x_e[t];

        // Deviation and realised delivery.
        model.add_constraint(
            format!("deviation[{idx}]"),
            LinExpr::new().term(d, 1.0).term(r, -1.0).term(mp, 1.0),
            Eq,
            0.0,
        )?;
        let delivered = LinExpr::new()
            .term(r, 1.0)
            .term(res, -dt)
            .term(dis_da, -dt)
            .term(ch_da, dt)
            .term(el_da, dt)
            .term(dis_p, -dt)
            .term(dis_m, dt)
            .term(ch_p, dt)
            .term(ch_m, -dt)
            .term(el_p, dt)
            .term(el_m, -dt);
        model.add_constraint(format!("realised[{idx}]"), delivered, Eq, 0.0)?;
        model.add_constraint(
            format!("curtail[{idx}]"),
            LinExpr::new().term(res, 1.0),
            Le,
            inst.pv.scenarios[s][t],
        )?;
        model.add_constraint(format!("grid_r_up[{idx}]"), LinExpr::new().term(r, 1.0), Le, grid)?;
        model.add_constraint(format!("grid_r_lo[{idx}]"), LinExpr::new().term(r, 1.0), Ge, -grid)?;

        // State of energy.
        let mut balance = LinExpr::new()
            .term(soe, 1.0)
            .term(ch_da, -dt * eta)
            .term(ch_p, -dt * eta)
            .term(ch_m, dt * eta)
            .term(dis_da, dt / eta)
            .term(dis_p, dt / eta)
            .term(dis_m, -dt / eta);
        let balance_rhs = if t == 0 {
            bat.initial_soe
        } else {
            balance.add(v.soe[t - 1], -1.0);
            0.0
        };
        model.add_constraint(format!("soe_balance[{idx}]"), balance, Eq, balance_rhs)?;
        model.add_constraint(
            format!("soe_cap[{idx}]"),
            LinExpr::new().term(soe, 1.0),
            Le,
            bat.capacity,
        )?;

        if options.accurate_charging {
            let mut split = LinExpr::new().term(soe, 1.0);
            for &seg in &segs {
                split.add(seg, -1.0);
            }
            model.add_constraint(format!("soe_split[{idx}]"), split, Eq, 0.0)?;
            for (j, (&seg, &w)) in segs.iter().zip(&widths).enumerate() {
                model.add_constraint(
                    format!("seg_width[{idx},{j}]"),
                    LinExpr::new().term(seg, 1.0),
                    Le,
                    w,
                )?;
            }
            // Charge ability shrinks with the energy held in the previous hour.
            let mut curve = LinExpr::new()
                .term(ch_da, dt * eta)
                .term(ch_p, dt * eta)
                .term(ch_m, -dt * eta);
            let mut rhs = curve_head;
            if t == 0 {
                rhs -= initial_segments
                    .iter()
                    .zip(&slopes)
                    .map(|(e, k)| e * k)
                    .sum::<f64>();
            } else {
                for (&prev, &k) in v.soe_seg[t - 1].iter().zip(&slopes) {
                    curve.add(prev, k);
                }
            }
            model.add_constraint(format!("charge_curve[{idx}]"), curve, Le, rhs)?;
        }

        // Balancing direction exclusivity and combined power caps.
        model.add_constraint(
            format!("bal_dir_up[{idx}]"),
            LinExpr::new()
                .term(ch_p, 1.0)
                .term(dis_m, 1.0)
                .term(x_b_b, 2.0 * p_bat),
            Le,
            2.0 * p_bat,
        )?;
        model.add_constraint(
            format!("bal_dir_dn[{idx}]"),
            LinExpr::new()
                .term(ch_m, 1.0)
                .term(dis_p, 1.0)
                .term(x_b_b, -2.0 * p_bat),
            Le,
            0.0,
        )?;
        model.add_constraint(
            format!("ch_up_cap[{idx}]"),
            LinExpr::new().term(ch_p, 1.0).term(ch_da, 1.0),
            Le,
            p_bat,
        )?;
        model.add_constraint(
            format!("ch_dn_cap[{idx}]"),
            LinExpr::new().term(ch_m, 1.0).term(ch_da, -1.0),
            Le,
            0.0,
        )?;
        model.add_constraint(
            format!("dis_up_cap[{idx}]"),
            LinExpr::new().term(dis_p, 1.0).term(dis_da, 1.0),
            Le,
            p_bat,
        )?;
        model.add_constraint(
            format!("dis_dn_cap[{idx}]"),
            LinExpr::new().term(dis_m, 1.0).term(dis_da, -1.0),
            Le,
            0.0,
        )?;

        // Electrolyzer.
        model.add_constraint(
            format!("el_power[{idx}]"),
            LinExpr::new()
                .term(el, 1.0)
                .term(el_da, -1.0)
                .term(el_p, -1.0)
                .term(el_m, 1.0),
            Eq,
            0.0,
        )?;
        model.add_constraint(
            format!("el_min[{idx}]"),
            LinExpr::new()
                .term(el, 1.0)
                .term(x_e, -ely.min_stable_fraction * p_el),
            Ge,
            0.0,
        )?;
        model.add_constraint(
            format!("el_max[{idx}]"),
            LinExpr::new().term(el, 1.0).term(x_e, -p_el),
            Le,
            0.0,
        )?;
        model.add_constraint(
            format!("h2_conv[{idx}]"),
            LinExpr::new()
                .term(el_net, 1.0)
                .term(hydrogen, -ely.power_per_kg),
            Eq,
            0.0,
        )?;
        model.add_constraint(
            format!("el_net[{idx}]"),
            LinExpr::new()
                .term(el_net, 1.0)
                .term(el, -ely.alpha)
                .term(x_e, -ely.beta * p_el),
            Eq,
            0.0,
        )?;
        model.add_constraint(
            format!("el_up_cap[{idx}]"),
            LinExpr::new().term(el_da, 1.0).term(el_p, 1.0),
            Le,
            p_el,
        )?;
        model.add_constraint(
            format!("el_dn_cap[{idx}]"),
            LinExpr::new().term(el_da, 1.0).term(el_m, -1.0),
            Ge,
            0.0,
        )?;

        v.d.push(d);
        v.r.push(r);
        v.res.push(res);
        v.ch_b_plus.push(ch_p);
        v.ch_b_minus.push(ch_m);
        v.dis_b_plus.push(dis_p);
        v.dis_b_minus.push(dis_m);
        v.el_b_plus.push(el_p);
        v.el_b_minus.push(el_m);
        v.soe.push(soe);
        v.soe_seg.push(segs);
        v.x_b_b.push(x_b_b);
        v.hydrogen.push(hydrogen);
        v.el.push(el);
        v.el_net.push(el_net);
    }
    Ok(v)
}

/// Largest charging power admitted by the charging curve given the segment
/// energies of the previous period, before the rated-power cap.
pub fn battery_max_charge_power(
    prev_soe_segments: &[f64],
    params: &BatteryParams,
    dt: f64,
) -> Result<f64> {
    let widths = params.segment_widths();
    let slopes = params.segment_slopes();
    if prev_soe_segments.len() != widths.len() {
        return Err(Error::LengthMismatch {
            what: "charge segments".into(),
            expected: widths.len(),
            found: prev_soe_segments.len(),
        });
    }
    for (j, (&e, &w)) in prev_soe_segments.iter().zip(&widths).enumerate() {
        if e > w + 1e-9 || e < -1e-9 {
            return Err(Error::SegmentOverflow {
                segment: j,
                value: e,
                width: w,
            });
        }
    }
    let reduction: f64 = prev_soe_segments.iter().zip(&slopes).map(|(e, k)| e * k).sum();
    Ok((params.charge_curve_f[0] * params.capacity - reduction) / (dt * params.eta))
}

/// Hydrogen produced in one period at electrolyzer power `el_power`, kg.
pub fn hydrogen_output(el_power: f64, on: bool, params: &ElectrolyzerParams) -> Result<f64> {
    const TOL: f64 = 1e-9;
    let p = params.rated_power;
    let ok = if on {
        el_power >= params.min_stable_fraction * p - TOL && el_power <= p + TOL
    } else {
        el_power.abs() <= TOL
    };
    if !ok {
        return Err(Error::PowerOutOfRange {
            power: el_power,
            on,
        });
    }
    let fixed = if on { params.beta * p } else { 0.0 };
    Ok((params.alpha * el_power + fixed) / params.power_per_kg)
}
