//! Simulate excited random walks: first-passage times, the backtrack
//! identity `T_n = n + 2 * (left jumps)`, return counts, and speed.
//!
//! ```bash
//! cargo run --release --example walk_basics
//! ```

use erw::env::EnvironmentLaw;
use erw::walk::{
    backtrack_identity_check, estimate_speed, simulate_walk, StopRule, WalkConfig,
};

fn main() {
    let law = EnvironmentLaw::single(vec![0.9, 0.9, 0.9]).unwrap(); // delta 2.4
    println!("law: three cookies of 0.9, delta = {:.1}\n", law.delta());

    let config = WalkConfig {
        stop: StopRule::FirstPassage {
            level: 1000,
            horizon: Some(10_000_000),
        },
        track_backtracks: true,
        monitor_levels: vec![10, 100, 1000],
        ..Default::default()
    };
    println!("five first-passage runs to level 1000:");
    for seed in 0..5 {
        let record = simulate_walk(&law, &config, seed);
        let (_, t) = record.reached_level().expect("transient law reaches 1000");
        let identity = backtrack_identity_check(&record).unwrap();
        println!(
            "  seed {seed}: T_10={:?} T_100={:?} T_1000={t} left_jumps={} identity_holds={identity} below_zero={}",
            record.passage_time(10),
            record.passage_time(100),
            record.left_jumps,
            record.steps_below_zero,
        );
    }

    // A recurrent law keeps coming back to the origin.
    let recurrent = EnvironmentLaw::single(vec![0.75]).unwrap(); // delta 0.5
    let config = WalkConfig::horizon(100_000);
    let mut total_returns = 0;
    for seed in 0..20 {
        total_returns += simulate_walk(&recurrent, &config, seed).returns_to_start;
    }
    println!(
        "\ndelta=0.5 law: {:.0} returns to the origin per 100k steps (mean of 20 walks)",
        total_returns as f64 / 20.0
    );

    // Law of large numbers: X_n / n.
    for (name, law) in [
        ("delta=2.4", law),
        ("placebo", EnvironmentLaw::placebo(1)),
    ] {
        let speed = estimate_speed(&law, 200_000, 60, 42);
        println!(
            "{name:<10} v_hat = {:+.4} +- {:.4} ({} reps of 200k steps)",
            speed.v_hat, speed.stderr, speed.reps
        );
    }
}
