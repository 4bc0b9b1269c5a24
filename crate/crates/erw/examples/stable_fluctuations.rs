//! Stable fluctuations in the ballistic regime `delta` in (2, 4): centered
//! passage times scale like `n^(2/delta)` and keep a heavy positive tail
//! of index `delta / 2`.
//!
//! ```bash
//! cargo run --release --example stable_fluctuations
//! ```

use erw::env::EnvironmentLaw;
use erw::rng::{context_id, stream_seed};
use erw::stats::{
    fit_tail_exponent, ks_two_sample, normalize_passage_times, stable_log_cf, StableParams,
    TailFitConfig, TailMethod,
};
use erw::walk::{simulate_walk, WalkConfig};
use rayon::prelude::*;

fn passage_times(law: &EnvironmentLaw, n: i64, reps: u64, master: u64) -> Vec<f64> {
    let config = WalkConfig::passage_capped(n, 100_000_000);
    let ctx = context_id("example.stable");
    (0..reps)
        .into_par_iter()
        .filter_map(|rep| {
            simulate_walk(law, &config, stream_seed(master, ctx, rep))
                .reached_level()
                .map(|(_, t)| t as f64)
        })
        .collect()
}

fn main() {
    let law = EnvironmentLaw::single(vec![0.9, 0.9, 0.9]).unwrap();
    let delta = law.delta();
    let alpha = delta / 2.0;
    println!("law delta = {delta:.1}: T_n fluctuations are stable with index {alpha:.1}\n");

    let (n1, n2) = (2_000i64, 8_000i64);
    let reps = 20_000u64;
    let t1 = passage_times(&law, n1, reps, 5);
    let t2 = passage_times(&law, n2, reps, 6);
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let v_hat = (n2 - n1) as f64 / (mean(&t2) - mean(&t1));
    println!("v_hat = {v_hat:.4} from passage means at n = {n1} and {n2}");

    let z1 = normalize_passage_times(&t1, n1 as u64, v_hat, delta).unwrap();
    let z2 = normalize_passage_times(&t2, n2 as u64, v_hat, delta).unwrap();
    let ks = ks_two_sample(&z1, &z2).unwrap();
    println!(
        "ks distance between the two normalized samples: {:.4} (still shrinking at these n)",
        ks.distance
    );

    let positives: Vec<f64> = z1.iter().copied().filter(|x| *x > 0.0).collect();
    let fit = fit_tail_exponent(
        &positives,
        TailMethod::LoglogSurvival,
        &TailFitConfig::default(),
    )
    .unwrap();
    println!(
        "positive-tail exponent of the normalized sample: {:.3} +- {:.3} (expected about {alpha:.1})",
        fit.exponent, fit.stderr
    );

    // The limit law: log characteristic function of the skewed stable.
    let params = StableParams::new(alpha, 1.0).unwrap();
    println!("\nlog cf of Z_(alpha,1) at a few points:");
    for u in [0.5, 1.0, 2.0] {
        let z = stable_log_cf(&params, u);
        println!("  u = {u}: {:.4} {:+.4}i", z.re, z.im);
    }
}
