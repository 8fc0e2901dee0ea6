mod common;

use common::{instance, rel_close, truncated_reference};
use hybrid_bid::evalreport::{
    read_sweep_csv, realized_imbalance_revenue_per_scenario, self_consistent_total,
};
use hybrid_bid::instance::Direction::{SystemShortage, SystemSurplus};
use hybrid_bid::prelude::*;

fn one_hour(d: f64) -> (Instance, Solution) {
    let mut inst = instance(&[100.0], &[1.0], &[vec![1.0]]);
    inst.imbalance.kappa = 0.4;
    let mut sol = Solution::default();
    sol.first_stage.mp = vec![0.0];
    sol.first_stage.ch_da = vec![0.0];
    sol.first_stage.dis_da = vec![0.0];
    sol.first_stage.el_da = vec![0.0];
    sol.first_stage.x_e = vec![0.0];
    sol.first_stage.x_b_da = vec![0.0];
    let mut sc = hybrid_bid::solution::ScenarioSolution::default();
    for v in [
        &mut sc.d, &mut sc.r, &mut sc.res, &mut sc.ch_b_plus, &mut sc.ch_b_minus,
        &mut sc.dis_b_plus, &mut sc.dis_b_minus, &mut sc.el_b_plus, &mut sc.el_b_minus,
        &mut sc.soe, &mut sc.x_b_b, &mut sc.hydrogen, &mut sc.el, &mut sc.el_net, &mut sc.z,
        &mut sc.y, &mut sc.mu1, &mut sc.mu2, &mut sc.xd1, &mut sc.xd2,
    ] {
        *v = vec![0.0];
    }
    sc.soe_seg = vec![vec![0.0; inst.battery.n_segments()]];
    sc.d = vec![d];
    sol.scenarios = vec![sc];
    (inst, sol)
}

#[test]
fn surplus_pays_the_discounted_price() {
    let (inst, sol) = one_hour(1.0);
    let seq = DirectionSequence::new(vec![SystemSurplus]);
    let v = realized_imbalance_revenue(&sol, &seq, &inst).unwrap();
    assert!((v - 60.0).abs() < 1e-9);
}

#[test]
fn shortfall_in_shortage_costs_the_premium() {
    let (inst, sol) = one_hour(-1.0);
    let seq = DirectionSequence::new(vec![SystemShortage]);
    let v = realized_imbalance_revenue(&sol, &seq, &inst).unwrap();
    assert!((v + 140.0).abs() < 1e-9);
}

#[test]
fn zero_deviation_settles_nothing() {
    let (inst, sol) = one_hour(0.0);
    for dir in [SystemSurplus, SystemShortage] {
        let seq = DirectionSequence::new(vec![dir]);
        assert_eq!(realized_imbalance_revenue(&sol, &seq, &inst).unwrap(), 0.0);
    }
}

#[test]
fn direction_length_is_checked() {
    let (inst, sol) = one_hour(1.0);
    let seq = DirectionSequence::new(vec![SystemSurplus, SystemSurplus]);
    assert!(matches!(
        realized_imbalance_revenue(&sol, &seq, &inst),
        Err(Error::LengthMismatch { .. })
    ));
    assert!(matches!(
        realized_imbalance_revenue_per_scenario(&sol, &[], &inst),
        Err(Error::LengthMismatch { .. })
    ));
}

fn small_sweep(gammas: &[usize]) -> (Instance, SweepReport) {
    let inst = truncated_reference(4, 2);
    let dirs: Vec<DirectionSequence> = hybrid_bid::reference::directions()
        .into_iter()
        .map(|s| DirectionSequence::new(s.directions[..4].to_vec()))
        .collect();
    let report = gamma_sweep(&inst, gammas, &dirs, &HighsBackend::new(), &SweepOptions::default()).unwrap();
    (inst, report)
}

#[test]
fn sweep_rows_are_sorted_consistent_and_monotone() {
    let (inst, report) = small_sweep(&[4, 0, 2, 1, 3]);
    let gammas: Vec<usize> = report.rows.iter().map(|r| r.gamma).collect();
    assert_eq!(gammas, vec![0, 1, 2, 3, 4]);
    for w in report.rows.windows(2) {
        assert!(w[1].total_expected <= w[0].total_expected + 1e-6 * w[0].total_expected.abs());
    }
    for r in &report.rows {
        assert_eq!(r.status, RowStatus::Optimal);
        let parts = r.da_revenue + r.hydrogen_expected + r.imbalance_expected;
        assert!(rel_close(r.total_expected, parts, 1e-6));
        assert!(rel_close(r.total_expected, r.objective, 1e-4));
        assert!(rel_close(r.real_total, r.da_revenue + r.hydrogen_expected + r.real_imbalance, 1e-9));
        let sol = r.solution.as_ref().unwrap();
        let inst = inst.with_gamma(r.gamma).unwrap();
        assert!(rel_close(self_consistent_total(sol, &inst).unwrap(), r.total_expected, 1e-4));
    }
}

#[test]
fn repeated_budget_gives_identical_rows() {
    let (_, report) = small_sweep(&[4, 4]);
    assert_eq!(report.rows.len(), 2);
    let (a, b) = (&report.rows[0], &report.rows[1]);
    assert_eq!(a.total_expected, b.total_expected);
    assert_eq!(a.solution, b.solution);
}

#[test]
fn cold_parallel_sweep_agrees_with_the_chain() {
    let inst = truncated_reference(3, 2);
    let gammas = [0, 1, 2, 3];
    let chained = gamma_sweep(&inst, &gammas, &[], &HighsBackend::new(), &SweepOptions::default()).unwrap();
    let cold_options = SweepOptions { warm_start: false, ..SweepOptions::default() };
    let cold = gamma_sweep(&inst, &gammas, &[], &HighsBackend::new(), &cold_options).unwrap();
    for (a, b) in chained.rows.iter().zip(&cold.rows) {
        assert!(rel_close(a.total_expected, b.total_expected, 1e-5));
        assert!(a.real_imbalance.is_nan());
    }
}

#[test]
fn kappa_zero_sweep_is_flat() {
    let mut inst = truncated_reference(3, 2);
    inst.imbalance.kappa = 0.0;
    let report = gamma_sweep(&inst, &[0, 1, 2, 3], &[], &HighsBackend::new(), &SweepOptions::default()).unwrap();
    let first = report.rows[0].total_expected;
    assert!(report.rows.iter().all(|r| rel_close(r.total_expected, first, 1e-6)));
    assert_eq!(report.plateau_start(1e-6), Some(0));
}

#[test]
fn budgets_beyond_the_horizon_are_rejected() {
    let inst = truncated_reference(3, 1);
    let result = gamma_sweep(&inst, &[4], &[], &HighsBackend::new(), &SweepOptions::default());
    assert!(matches!(result, Err(Error::Validation { .. })));
}

#[test]
fn export_round_trips_to_six_decimals() {
    let (_, report) = small_sweep(&[0, 2, 4]);
    let dir = tempfile::tempdir().unwrap();
    let files = export_report(&report, dir.path()).unwrap();
    assert_eq!(files.len(), 4);
    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 4);
    let back = read_sweep_csv(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(back.rows.len(), 3);
    for (a, b) in report.rows.iter().zip(&back.rows) {
        assert_eq!(a.gamma, b.gamma);
        assert_eq!(a.status, b.status);
        for (x, y) in [
            (a.total_expected, b.total_expected),
            (a.da_revenue, b.da_revenue),
            (a.hydrogen_expected, b.hydrogen_expected),
            (a.imbalance_expected, b.imbalance_expected),
            (a.real_total, b.real_total),
            (a.real_imbalance, b.real_imbalance),
        ] {
            assert!((x - y).abs() <= 5e-7, "{x} vs {y}");
        }
    }
    let again = tempfile::tempdir().unwrap();
    export_report(&report, again.path()).unwrap();
    for name in ["sweep.csv", "positions.csv", "soe.csv", "electrolyzer.csv"] {
        let a = std::fs::read(dir.path().join(name)).unwrap();
        let b = std::fs::read(again.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between exports");
    }
    let positions = std::fs::read_to_string(dir.path().join("positions.csv")).unwrap();
    assert_eq!(positions.lines().count(), 1 + 3 * 4);
}

#[test]
fn empty_report_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        export_report(&SweepReport::default(), dir.path()),
        Err(Error::EmptyReport)
    ));
}

#[test]
fn ablation_respects_feasible_set_inclusion() {
    let inst = truncated_reference(4, 2);
    let gammas = [0, 2, 4];
    let report = technology_ablation(&inst, &gammas, &[], &HighsBackend::new(), &SweepOptions::default()).unwrap();
    assert!(report.dominance_violations(1e-6).is_empty(), "{:?}", report.dominance_violations(1e-6));
    let pv = report.report(Technology::Pv).unwrap();
    for row in &pv.rows {
        let sol = row.solution.as_ref().unwrap();
        assert!(sol.first_stage.ch_da.iter().chain(&sol.first_stage.el_da).all(|v| v.abs() < 1e-9));
        for sc in &sol.scenarios {
            assert!(sc.soe.iter().chain(&sc.el).chain(&sc.hydrogen).all(|v| v.abs() < 1e-9));
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let files = export_ablation(&report, dir.path()).unwrap();
    assert_eq!(files.len(), 4 * 4 + 1);
    let summary = std::fs::read_to_string(dir.path().join("ablation.csv")).unwrap();
    assert_eq!(summary.lines().next().unwrap(), "gamma,PV,PV+EL,PV+BAT,PV+EL+BAT");
}

#[test]
fn worst_case_directions_match_the_adversary() {
    let inst = truncated_reference(4, 2).with_gamma(2).unwrap();
    let solved = common::solve(&inst);
    let dirs = worst_case_directions(&solved.solution, &inst);
    assert_eq!(dirs.len(), 2);
    let expected = worst_case_profit(&solved.solution, &inst).unwrap();
    let realised = realized_imbalance_revenue_per_scenario(&solved.solution, &dirs, &inst).unwrap();
    assert!(rel_close(realised, expected.imbalance_revenue_expected, 1e-9));
}
