//! The branching process behind the walk: extinction times and total
//! progeny are heavy tailed with exponents `delta` and `delta / 2`.
//!
//! ```bash
//! cargo run --release --example branching_extinction
//! ```

use erw::branching::{run_to_extinction, BranchingConfig};
use erw::env::EnvironmentLaw;
use erw::stats::{fit_tail_exponent, TailFitConfig, TailMethod};

fn main() {
    let law = EnvironmentLaw::single(vec![0.875, 0.875]).unwrap();
    let delta = law.delta();
    println!("law delta = {delta}: expect sigma0 tail {delta}, progeny tail {}\n", delta / 2.0);

    let config = BranchingConfig::default();
    println!("a few runs from v0 = 0:");
    for seed in 0..5 {
        let run = run_to_extinction(&law, 0, &config, seed);
        println!(
            "  seed {seed}: sigma0 = {:?}, progeny = {}",
            run.sigma0, run.progeny
        );
    }

    let runs = 1_000_000u64;
    let mut sigmas = Vec::with_capacity(runs as usize);
    let mut progenies = Vec::with_capacity(runs as usize);
    let mut censored = 0u64;
    for seed in 0..runs {
        let run = run_to_extinction(&law, 0, &config, seed);
        match run.sigma0 {
            Some(s) => {
                sigmas.push(s as f64);
                progenies.push(run.progeny as f64);
            }
            None => censored += 1,
        }
    }
    println!("\n{runs} extinction runs ({censored} censored)");

    let sigma_fit = fit_tail_exponent(
        &sigmas,
        TailMethod::LoglogSurvival,
        &TailFitConfig {
            range: Some((30.0, 1000.0)),
            ..Default::default()
        },
    )
    .unwrap();
    println!(
        "extinction-time exponent: {:.3} +- {:.3} over [{:.0}, {:.0}] (expected {delta})",
        sigma_fit.exponent, sigma_fit.stderr, sigma_fit.range.0, sigma_fit.range.1
    );

    let progeny_fit = fit_tail_exponent(
        &progenies,
        TailMethod::LoglogSurvival,
        &TailFitConfig {
            range: Some((100.0, 30_000.0)),
            ..Default::default()
        },
    )
    .unwrap();
    println!(
        "total-progeny exponent:   {:.3} +- {:.3} over [{:.0}, {:.0}] (expected {})",
        progeny_fit.exponent,
        progeny_fit.stderr,
        progeny_fit.range.0,
        progeny_fit.range.1,
        delta / 2.0
    );
}
