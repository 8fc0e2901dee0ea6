//! Brackets the MILP optimum of a two-hour instance by exhaustive search.

use hybrid_bid::oracle::DEFAULT_GRID_STEP;
use hybrid_bid::prelude::*;

fn main() -> Result<()> {
    let mut instance = hybrid_bid::reference::instance();
    instance.time.n_periods = 2;
    instance.prices.da_price = vec![35.0, 90.0];
    instance.pv.forecast = vec![1.0, 0.5];
    instance.pv.scenarios = vec![vec![1.5, 0.0]];
    instance.pv.probabilities = vec![1.0];
    instance.battery.capacity = 1.0;
    instance.battery.rated_power = 1.0;
    instance.electrolyzer.rated_power = 1.0;
    let instance = instance.with_gamma(1)?;

    let solved = solve_instance(&instance, &HighsBackend::new(), &SolveOptions::default())?;
    let grid = enumerate_tiny(&instance, DEFAULT_GRID_STEP)?;
    let best = grid.best_profit.expect("grid has a feasible point");
    let slack = lipschitz_constant(&instance) * DEFAULT_GRID_STEP;

    println!("milp objective      {:.4}", solved.result.objective_value);
    println!("grid optimum        {best:.4} over {} nodes", grid.nodes);
    println!("admissible envelope [{best:.4}, {:.4}]", best + slack);
    println!("duality clean       {}", verify_duality(&solved.solution, &instance, 1e-6).is_clean());
    println!("violated rows       {}", solved.audit()?.len());
    Ok(())
}
