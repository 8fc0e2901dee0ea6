//! Expected profit of PV alone and with battery and/or electrolyzer.
//!
//! cargo run --release --example ablation -- 0,6,12,24

use hybrid_bid::prelude::*;

fn main() -> Result<()> {
    let gammas: Vec<usize> = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "0,6,12,24".into())
        .split(',')
        .map(|g| g.trim().parse().expect("budget list like 0,6,12"))
        .collect();
    let instance = hybrid_bid::reference::instance();
    let options = SweepOptions {
        solve: SolveOptions { time_limit: 20.0, ..SolveOptions::default() },
        ..SweepOptions::default()
    };
    let report = technology_ablation(&instance, &gammas, &[], &HighsBackend::new(), &options)?;

    print!("gamma");
    for (tech, _) in &report.configurations {
        print!(" {:>11}", tech.label());
    }
    println!();
    for (i, g) in gammas.iter().enumerate() {
        print!("{g:>5}");
        for (_, r) in &report.configurations {
            print!(" {:>11.2}", r.rows[i].total_expected);
        }
        println!();
    }
    let issues = report.dominance_violations(1e-6);
    println!("dominance violations: {}", issues.len());
    export_ablation(&report, "out/ablation")?;
    Ok(())
}
