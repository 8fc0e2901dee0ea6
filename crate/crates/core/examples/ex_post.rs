//! Settles a fixed schedule against the thirty realised direction days and
//! against its own worst case.

use hybrid_bid::evalreport::self_consistent_total;
use hybrid_bid::prelude::*;

fn main() -> Result<()> {
    let instance = hybrid_bid::reference::instance().with_gamma(6)?;
    let options = SolveOptions { time_limit: 30.0, ..SolveOptions::default() };
    let solved = solve_instance(&instance, &HighsBackend::new(), &options)?;
    let sol = &solved.solution;
    let expected = worst_case_profit(sol, &instance)?;

    let days = hybrid_bid::reference::directions();
    let revenues = days
        .iter()
        .map(|d| realized_imbalance_revenue(sol, d, &instance))
        .collect::<Result<Vec<_>>>()?;
    let mean = revenues.iter().sum::<f64>() / revenues.len() as f64;
    let lo = revenues.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = revenues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    println!("worst-case expected profit   {:>10.2} EUR", expected.total);
    println!("worst-case imbalance revenue {:>10.2} EUR", expected.imbalance_revenue_expected);
    println!("realised imbalance revenue   {mean:>10.2} EUR (range {lo:.2} to {hi:.2})");
    println!(
        "realised total               {:>10.2} EUR",
        expected.da_revenue + expected.hydrogen_net_expected() + mean
    );
    println!("own worst case replayed      {:>10.2} EUR", self_consistent_total(sol, &instance)?);
    Ok(())
}
