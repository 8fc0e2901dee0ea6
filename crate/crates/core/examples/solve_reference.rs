//! Solves the reference day at one budget and prints the day-ahead bids.
//!
//! cargo run --release --example solve_reference -- 12

use hybrid_bid::prelude::*;

fn main() -> Result<()> {
    let gamma = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(12);
    let instance = hybrid_bid::reference::instance().with_gamma(gamma)?;
    let options = SolveOptions { time_limit: 60.0, ..SolveOptions::default() };
    let solved = solve_instance(&instance, &HighsBackend::new(), &options)?;
    let profit = worst_case_profit(&solved.solution, &instance)?;

    println!("gamma {gamma}: {} after {:.1} s, gap {:.2e}", solved.result.status, solved.result.wall_time, solved.result.mip_gap);
    println!("  day-ahead      {:>10.2} EUR", profit.da_revenue);
    println!("  hydrogen (net) {:>10.2} EUR", profit.hydrogen_net_expected());
    println!("  imbalance      {:>10.2} EUR", profit.imbalance_revenue_expected);
    println!("  total          {:>10.2} EUR", profit.total);
    println!("hour  price    bid MWh");
    for (t, (mp, l)) in solved.solution.first_stage.mp.iter().zip(&instance.prices.da_price).enumerate() {
        println!("{t:>4} {l:>6.2} {mp:>10.3}");
    }
    Ok(())
}
