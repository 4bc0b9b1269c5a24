//! Above `delta = 4` the walk is diffusive: the studentized endpoint
//! `(X_n - v n) / (s sqrt(n))` is asymptotically standard normal, while a
//! heavy-tailed law at the same size is visibly not.
//!
//! ```bash
//! cargo run --release --example gaussian_regime
//! ```

use erw::env::EnvironmentLaw;
use erw::stats::gaussian_regime_check;

fn main() {
    let reps = 4_000;
    let n = 20_000;

    let gaussian_law = EnvironmentLaw::single(vec![0.95; 5]).unwrap(); // delta 4.5
    let check = gaussian_regime_check(&gaussian_law, n, reps, 21).unwrap();
    println!(
        "delta = {:.1}: ks distance to N(0,1) = {:.4}  (v_hat {:.4})",
        gaussian_law.delta(),
        check.ks_distance,
        check.v_hat
    );

    // Contrast: the stable regime fails the same test at the same size.
    let stable_law = EnvironmentLaw::single(vec![0.9, 0.9, 0.9]).unwrap(); // delta 2.4
    let check = gaussian_regime_check(&stable_law, n, reps, 22).unwrap();
    println!(
        "delta = {:.1}: ks distance to N(0,1) = {:.4}  (heavy tail, regime violation)",
        stable_law.delta(),
        check.ks_distance
    );
}
