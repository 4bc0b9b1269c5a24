//! Two routes to the walk speed: the law of large numbers on `X_n / n`
//! and the renewal identity `E S = (1/v - 1) / (2 lambda)` built from
//! branching excursions between zeros.
//!
//! ```bash
//! cargo run --release --example speed_and_renewal
//! ```

use erw::branching::{renewal_cycles, BranchingConfig};
use erw::env::EnvironmentLaw;
use erw::walk::estimate_speed;

fn main() {
    let law = EnvironmentLaw::single(vec![0.9, 0.9, 0.9]).unwrap(); // delta 2.4
    println!("law delta = {:.1} (ballistic)\n", law.delta());

    let walk = estimate_speed(&law, 500_000, 40, 11);
    println!(
        "walk estimate:    v = {:.4} +- {:.4}  (40 reps of 500k steps)",
        walk.v_hat, walk.stderr
    );

    let cycles = renewal_cycles(&law, 2_000_000, &BranchingConfig::default(), 12);
    println!(
        "renewal estimate: v = {:.4}            ({} cycles, {} censored)",
        cycles.speed(),
        cycles.n_cycles(),
        cycles.censored
    );
    println!(
        "  cycle structure: E[length] = {:.3} (lambda = {:.3}), E[progeny] = {:.3}",
        cycles.mean_length(),
        cycles.lambda_hat(),
        cycles.mean_progeny()
    );
    let rel = (walk.v_hat - cycles.speed()).abs() / cycles.speed();
    println!("\nrelative disagreement: {:.2}%", 100.0 * rel);

    // Zero-speed regime: transient but sub-ballistic.
    let slow = EnvironmentLaw::single(vec![0.875, 0.875]).unwrap(); // delta 1.5
    let est = estimate_speed(&slow, 500_000, 40, 13);
    println!(
        "\ndelta = 1.5 law:  v = {:.5} +- {:.5} (transient with zero speed)",
        est.v_hat, est.stderr
    );
}
