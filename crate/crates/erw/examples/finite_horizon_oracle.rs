//! The exhaustive small-horizon oracle: exact event probabilities from the
//! coin-toss tree, cross-checked against Monte Carlo frequencies.
//!
//! ```bash
//! cargo run --release --example finite_horizon_oracle
//! ```

use erw::env::EnvironmentLaw;
use erw::walk::{exact_finite_horizon_oracle, simulate_walk, WalkConfig};
use std::collections::BTreeMap;

fn main() {
    let p = 0.7;
    let law = EnvironmentLaw::single(vec![p]).unwrap();
    let horizon = 7;
    let dist = exact_finite_horizon_oracle(&law, horizon).unwrap();

    println!("single cookie p = {p}, horizon {horizon}\n");
    println!("exact first-passage pmf of level 1 (only odd times are possible):");
    for t in [1u64, 3, 5, 7] {
        println!("  P(T_1 = {t}) = {:.6}", dist.prob_passage_at(1, t));
    }
    // Hand values: P(T_1 = 1) = p, P(T_1 = 3) = (1-p) p / 2.
    assert!((dist.prob_passage_at(1, 1) - p).abs() < 1e-12);
    assert!((dist.prob_passage_at(1, 3) - (1.0 - p) * p * 0.5).abs() < 1e-12);

    let reps = 200_000u64;
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    for seed in 0..reps {
        let record = simulate_walk(&law, &WalkConfig::horizon(horizon as u64), seed);
        *counts.entry(record.final_position).or_insert(0) += 1;
    }
    println!("\nendpoint distribution, exact vs {reps} simulations:");
    println!("  {:>4} {:>10} {:>10}", "x", "exact", "monte carlo");
    for (x, exact) in &dist.final_position {
        let freq = *counts.get(x).unwrap_or(&0) as f64 / reps as f64;
        println!("  {x:>4} {exact:>10.6} {freq:>10.6}");
    }
    let mass: f64 = dist.final_position.values().sum();
    println!("\ntotal exact mass: {mass:.12}");
}
