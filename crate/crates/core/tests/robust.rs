mod common;

use common::{rel_close, solve, truncated_reference};
use hybrid_bid::formulation::FormulationOptions;
use hybrid_bid::prelude::*;
use hybrid_bid::robust::ROBUST_ROWS_PER_CELL;

#[test]
fn kappa_zero_makes_the_budget_irrelevant() {
    let mut inst = truncated_reference(4, 2);
    inst.imbalance.kappa = 0.0;
    let low = solve(&inst.with_gamma(0).unwrap());
    let high = solve(&inst.with_gamma(4).unwrap());
    assert!(rel_close(low.result.objective_value, high.result.objective_value, 1e-6));
}

#[test]
fn profit_does_not_rise_with_the_budget() {
    let inst = truncated_reference(5, 2);
    let mut last = f64::INFINITY;
    for g in 0..=5 {
        let solved = solve(&inst.with_gamma(g).unwrap());
        assert!(solved.result.is_optimal());
        let obj = solved.result.objective_value;
        assert!(obj <= last + 2e-6 * last.abs().min(obj.abs()).max(1.0), "gamma {g}: {obj} > {last}");
        last = obj;
    }
}

#[test]
fn optimal_solves_satisfy_duality_and_absolute_values() {
    let inst = truncated_reference(4, 2);
    for g in [0, 1, 3] {
        let inst = inst.with_gamma(g).unwrap();
        let solved = solve(&inst);
        assert!(verify_duality(&solved.solution, &inst, 1e-6).is_clean());
        for sc in &solved.solution.scenarios {
            for (y, d) in sc.y.iter().zip(&sc.d) {
                assert!((y - d.abs()).abs() <= 1e-6);
            }
        }
        let recomputed = worst_case_profit(&solved.solution, &inst).unwrap().total;
        assert!(rel_close(recomputed, solved.result.objective_value, 1e-6));
    }
}

#[test]
fn sign_split_rows_leave_the_optimum_unchanged() {
    let inst = truncated_reference(4, 2).with_gamma(1).unwrap();
    let options = SolveOptions::default();
    let with = Formulation::build_with(&inst, FormulationOptions { sign_split: true, ..Default::default() })
        .unwrap();
    let without = Formulation::build_with(&inst, FormulationOptions { sign_split: false, ..Default::default() })
        .unwrap();
    assert_eq!(
        with.model.num_constraints() - without.model.num_constraints(),
        hybrid_bid::robust::SIGN_SPLIT_ROWS_PER_CELL * 4 * 2
    );
    let a = with.solve(&HighsBackend::new(), &options).unwrap();
    let b = without.solve(&HighsBackend::new(), &options).unwrap();
    assert!(rel_close(a.result.objective_value, b.result.objective_value, 1e-6));
}

#[test]
fn robust_block_adds_eight_rows_per_cell() {
    let inst = truncated_reference(3, 2);
    let (facility, _) = hybrid_bid::facility::build_facility(&inst).unwrap();
    let f = Formulation::build_with(&inst, FormulationOptions { sign_split: false, ..Default::default() }).unwrap();
    assert_eq!(
        f.model.num_constraints() - facility.num_constraints(),
        ROBUST_ROWS_PER_CELL * 3 * 2
    );
}

#[test]
fn warm_start_from_a_larger_budget_is_accepted() {
    let inst = truncated_reference(4, 2);
    let options = SolveOptions::default();
    let high = solve(&inst.with_gamma(4).unwrap());
    let mut start = high.solution.clone();
    let low_inst = inst.with_gamma(1).unwrap();
    hybrid_bid::robust::refit_duals(&mut start, &low_inst, 1);
    let f = Formulation::build(&low_inst).unwrap();
    assert!(f.audit(&start).unwrap().is_empty());
    let warm = f.solve_from(&HighsBackend::new(), &options, Some(&start)).unwrap();
    let cold = solve(&low_inst);
    assert!(rel_close(warm.result.objective_value, cold.result.objective_value, 1e-6));
}
