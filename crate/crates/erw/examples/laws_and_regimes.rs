//! Cookie laws and the drift parameter: build laws inline and from TOML,
//! reflect them, check non-degeneracy, and classify the asymptotic regime.
//!
//! ```bash
//! cargo run --release --example laws_and_regimes
//! ```

use erw::env::{classify_regime, EnvironmentLaw};

fn describe(name: &str, law: &EnvironmentLaw) {
    let delta = law.delta();
    let regime = if delta >= 0.0 {
        format!("{:?}", classify_regime(delta).unwrap())
    } else {
        format!("{:?} (after reflection)", classify_regime(-delta).unwrap())
    };
    println!(
        "{name:<18} M={} atoms={} delta={delta:+.3} nondegenerate={} regime={regime}",
        law.m(),
        law.n_atoms(),
        law.is_nondegenerate(),
    );
}

fn main() {
    // Deterministic single-stack laws at the acceptance operating points.
    describe("placebo", &EnvironmentLaw::placebo(3));
    describe("delta=0.5", &EnvironmentLaw::single(vec![0.75]).unwrap());
    describe("delta=1.5", &EnvironmentLaw::single(vec![0.875, 0.875]).unwrap());
    describe("delta=2.4", &EnvironmentLaw::single(vec![0.9, 0.9, 0.9]).unwrap());
    describe("delta=4.0", &EnvironmentLaw::single(vec![0.9; 5]).unwrap());
    describe("delta=4.5", &EnvironmentLaw::single(vec![0.95; 5]).unwrap());

    // A random environment: two kinds of sites, one with negative cookies.
    let mixed = EnvironmentLaw::new(
        3,
        vec![
            (vec![0.9, 0.9, 0.9], 0.6),
            (vec![0.2, 0.3, 0.4], 0.4),
        ],
    )
    .unwrap();
    describe("mixed", &mixed);

    // Mirroring every cookie negates the drift exactly.
    let mirrored = mixed.reflected();
    describe("mixed reflected", &mirrored);

    // The same law from its file form.
    let text = "M = 2\natoms = [{ probs = [0.875, 0.875], weight = 1.0 }]\n";
    let from_toml = EnvironmentLaw::from_toml_str(text).unwrap();
    describe("from TOML", &from_toml);

    // Degenerate example: a certain cookie kills one of the products.
    let one_sided = EnvironmentLaw::single(vec![1.0, 0.9]).unwrap();
    describe("one-sided", &one_sided);
}
