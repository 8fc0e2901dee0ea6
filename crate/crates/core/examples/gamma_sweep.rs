//! Sweep over every budget of the reference day, written to
//! `out/sweep`.
//!
//! cargo run --release --example gamma_sweep -- 20

use hybrid_bid::prelude::*;

fn main() -> Result<()> {
    let limit = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20.0);
    let instance = hybrid_bid::reference::instance();
    let directions = hybrid_bid::reference::directions();
    let options = SweepOptions {
        solve: SolveOptions { time_limit: limit, ..SolveOptions::default() },
        ..SweepOptions::default()
    };
    let gammas: Vec<usize> = (0..=instance.n_periods()).collect();
    let report = gamma_sweep(&instance, &gammas, &directions, &HighsBackend::new(), &options)?;

    println!("gamma  expected      da  hydrogen  imbalance  real total  status");
    for r in &report.rows {
        println!(
            "{:>5} {:>9.2} {:>7.2} {:>9.2} {:>10.2} {:>11.2}  {} (gap {:.1e})",
            r.gamma, r.total_expected, r.da_revenue, r.hydrogen_expected, r.imbalance_expected,
            r.real_total, r.status, r.mip_gap
        );
    }
    if let Some(g) = report.plateau_start(1e-4) {
        println!("profit is flat from gamma {g}");
    }
    for path in export_report(&report, "out/sweep")? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
