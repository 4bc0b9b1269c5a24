//! The approximating diffusion `dY = (1 - delta) dt + sqrt(2 Y) dB`:
//! absorption, closed-form hitting probabilities vs Monte Carlo, and the
//! exact scaling law.
//!
//! ```bash
//! cargo run --release --example diffusion_paths
//! ```

use erw::diffusion::{
    hitting_prob, simulate_y, verify_scaling, DiffusionConfig, PathFunctional,
};

fn main() {
    let delta = 2.5;
    println!("delta = {delta}\n");

    let config = DiffusionConfig {
        levels: vec![0.5, 2.0],
        ..DiffusionConfig::new(delta, 1.0)
    };
    println!("three paths from y0 = 1:");
    for seed in 0..3 {
        let r = simulate_y(&config, seed);
        println!(
            "  seed {seed}: tau0 = {:?}, area = {:.3}, hit 0.5 at {:?}, hit 2 at {:?}",
            r.tau0,
            r.area,
            r.level_hit(0.5),
            r.level_hit(2.0)
        );
    }

    // P(hit a before b) has the closed form (b^d - y^d) / (b^d - a^d).
    let (a, b) = (0.5, 2.0);
    let exact = hitting_prob(1.0, a, b, delta).unwrap();
    let stop_config = DiffusionConfig {
        levels: vec![a, b],
        stop_on_levels: true,
        ..DiffusionConfig::new(delta, 1.0)
    };
    let reps = 20_000u64;
    let mut hit_a = 0u64;
    for seed in 0..reps {
        let r = simulate_y(&stop_config, seed);
        let first_a = match (r.level_hit(a), r.level_hit(b)) {
            (Some(ta), Some(tb)) => ta < tb,
            (Some(_), None) => true,
            _ => false,
        };
        hit_a += u64::from(first_a);
    }
    let mc = hit_a as f64 / reps as f64;
    println!("\nP(hit {a} before {b} from 1): closed form {exact:.5}, monte carlo {mc:.5}");

    // Scaling: tau0 of Y^y rescaled by y matches tau0 of Y^1 in law.
    let report = verify_scaling(4.0, 1.5, PathFunctional::AbsorptionTime, 20_000, 3).unwrap();
    println!(
        "\nscaling check at delta 1.5, y = 4: ks(tau0/4 vs tau0 of Y^1) = {:.4} ({} paths/side)",
        report.ks.distance, 20_000
    );
}
