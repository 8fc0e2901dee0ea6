//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use hybrid_bid::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

/// Valid instance with `n` hours and the given scenario rows.
pub fn instance(prices: &[f64], forecast: &[f64], scenarios: &[Vec<f64>]) -> Instance {
    let n = prices.len();
    let text = json!({
        "time": {"n_periods": n, "dt": 1.0},
        "prices": {"da": prices, "hydrogen": 2.0, "water": 0.397},
        "pv": {"forecast": forecast, "scenarios": scenarios},
        "battery": {"capacity": 1.0, "rated_power": 1.0, "eta": 0.92},
        "electrolyzer": {"rated_power": 1.0, "min_stable_fraction": 0.1,
                         "power_per_kg": 0.0394, "alpha": 0.689, "beta": 0.011},
        "imbalance": {"kappa": 0.4, "gamma": 0},
        "grid": {"connection_limit": 20.0}
    })
    .to_string();
    Instance::from_json_str(&text).expect("fixture is valid")
}

/// Random T=2, S=1 instance with ratings of at most 1 MW on a 0.5 MW grid.
pub fn micro_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prices: Vec<f64> = (0..2).map(|_| rng.gen_range(-10.0..120.0)).collect();
    let forecast: Vec<f64> = (0..2).map(|_| rng.gen_range(0.0..2.0)).collect();
    let scenario: Vec<f64> = forecast
        .iter()
        .map(|f| (f + rng.gen_range(-1.0..1.0)).max(0.0))
        .collect();
    let mut inst = instance(&prices, &forecast, &[scenario]);
    let halves = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.5) { 0.5 } else { 1.0 };
    inst.battery.rated_power = halves(&mut rng);
    inst.battery.capacity = [0.5, 1.0, 2.0][rng.gen_range(0..3)];
    inst.battery.initial_soe = if rng.gen_bool(0.5) { 0.0 } else { inst.battery.capacity / 2.0 };
    inst.electrolyzer.rated_power = halves(&mut rng);
    inst.imbalance.kappa = rng.gen_range(0.0..0.6);
    inst.imbalance.gamma = rng.gen_range(0..=2);
    inst.grid.connection_limit = if rng.gen_bool(0.3) { 1.5 } else { 20.0 };
    inst.validate().expect("micro instance is valid");
    inst
}

/// The reference instance cut to its first `n` hours and `s` scenarios.
pub fn truncated_reference(n: usize, s: usize) -> Instance {
    let full = hybrid_bid::reference::instance();
    let prices = full.prices.da_price[..n].to_vec();
    let forecast = full.pv.forecast[..n].to_vec();
    let scenarios: Vec<Vec<f64>> = full.pv.scenarios[..s].iter().map(|r| r[..n].to_vec()).collect();
    let mut inst = full.clone();
    inst.time.n_periods = n;
    inst.prices.da_price = prices;
    inst.pv.forecast = forecast;
    inst.pv.scenarios = scenarios;
    inst.pv.probabilities = vec![1.0 / s as f64; s];
    inst.validate().expect("truncated instance is valid");
    inst
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

pub fn solve(inst: &Instance) -> Solved {
    solve_instance(inst, &HighsBackend::new(), &SolveOptions::default()).expect("solve succeeds")
}
