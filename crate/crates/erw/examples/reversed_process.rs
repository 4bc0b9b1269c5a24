//! The reversed backtrack array of the walk has the law of the branching
//! process: `D_{n,k}` matches `V_{n-k}` in distribution, coordinate by
//! coordinate.
//!
//! ```bash
//! cargo run --release --example reversed_process
//! ```

use erw::branching::reversed_identity_samples;
use erw::env::EnvironmentLaw;
use erw::stats::ks_two_sample;

fn main() {
    let law = EnvironmentLaw::single(vec![0.875, 0.875]).unwrap();
    let n = 20;
    let ks_at = [0i64, 5, 10, 15, 19, 20];
    let reps = 20_000;

    let samples = reversed_identity_samples(&law, n, &ks_at, reps, 1_000_000, 7);
    println!(
        "{reps} walks to level {n} (dropped {}) vs {reps} chain paths\n",
        samples.dropped_walks
    );
    println!(
        "{:>4} {:>12} {:>12} {:>10} {:>10}",
        "k", "mean D_nk", "mean V_n-k", "ks dist", "ks p"
    );
    for (i, k) in ks_at.iter().enumerate() {
        let walk: Vec<f64> = samples.walk[i].iter().map(|d| *d as f64).collect();
        let chain: Vec<f64> = samples.branching[i].iter().map(|v| *v as f64).collect();
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        let ks = ks_two_sample(&walk, &chain).unwrap();
        println!(
            "{k:>4} {:>12.4} {:>12.4} {:>10.4} {:>10.4}",
            mean(&walk),
            mean(&chain),
            ks.distance,
            ks.p_value
        );
    }
    println!("\nat k = n both sides are identically zero: the walk never");
    println!("jumps left from its target level before reaching it, and the");
    println!("chain starts empty.");
}
