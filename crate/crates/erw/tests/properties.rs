//! Property tests for the structural invariants: reflection symmetry,
//! passage-time parity, oracle mass, and estimator identities.

use erw::branching::exact_v1_pmf;
use erw::env::{classify_regime, CookieStack, EnvironmentLaw};
use erw::stats::{ks_two_sample, stable_log_cf, StableParams};
use erw::walk::{backtrack_identity_check, simulate_walk, StopRule, WalkConfig};
use proptest::prelude::*;

fn arb_law() -> impl Strategy<Value = EnvironmentLaw> {
    (1usize..=4)
        .prop_flat_map(|m| {
            prop::collection::vec(
                (prop::collection::vec(0.0f64..=1.0, m), 0.05f64..1.0),
                1..=3,
            )
        })
        .prop_map(|atoms| {
            let total: f64 = atoms.iter().map(|(_, w)| w).sum();
            let m = atoms[0].0.len();
            EnvironmentLaw::new(
                m,
                atoms
                    .into_iter()
                    .map(|(probs, w)| (probs, w / total))
                    .collect(),
            )
            .expect("normalized law is valid")
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reflection_negates_delta_and_is_involutive(law in arb_law()) {
        let reflected = law.reflected();
        prop_assert!((reflected.delta() + law.delta()).abs() < 1e-12);
        // Atomwise involution, up to one rounding of 1 - (1 - p).
        let back = reflected.reflected();
        for ((a, wa), (b, wb)) in back.atoms().zip(law.atoms()) {
            prop_assert_eq!(wa, wb);
            for (x, y) in a.probs().iter().zip(b.probs()) {
                prop_assert!((x - y).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn delta_is_bounded_by_stack_depth(law in arb_law()) {
        prop_assert!(law.delta().abs() <= law.m() as f64 + 1e-12);
    }

    #[test]
    fn regime_classification_is_total_on_nonnegatives(delta in 0.0f64..100.0) {
        prop_assert!(classify_regime(delta).is_ok());
    }

    #[test]
    fn cookies_beyond_the_stack_are_fair(
        probs in prop::collection::vec(0.0f64..=1.0, 0..5),
        extra in 1usize..20
    ) {
        let stack = CookieStack::new(probs.clone());
        prop_assert_eq!(stack.prob(probs.len() + extra), 0.5);
    }

    #[test]
    fn passage_time_parity_and_backtrack_identity(law in arb_law(), seed in 0u64..10_000) {
        let config = WalkConfig {
            stop: StopRule::FirstPassage { level: 8, horizon: Some(200_000) },
            track_backtracks: true,
            ..Default::default()
        };
        let record = simulate_walk(&law, &config, seed);
        if let Some((level, time)) = record.reached_level() {
            prop_assert_eq!((time as i64 - level) % 2, 0);
            prop_assert!(backtrack_identity_check(&record).unwrap());
        }
    }

    #[test]
    fn exact_pmf_mass_is_one(
        probs in prop::collection::vec(0.0f64..=1.0, 0..=5),
        v0 in 0u64..=4
    ) {
        let pmf = exact_v1_pmf(&CookieStack::new(probs), v0, 400).unwrap();
        prop_assert!((pmf.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stable_log_cf_conjugate_symmetry(
        alpha in 0.1f64..=2.0,
        b in 0.01f64..10.0,
        u in -50.0f64..50.0
    ) {
        let params = StableParams::new(alpha, b).unwrap();
        let plus = stable_log_cf(&params, u);
        let minus = stable_log_cf(&params, -u);
        prop_assert!((plus.re - minus.re).abs() <= 1e-9 * (1.0 + plus.re.abs()));
        prop_assert!((plus.im + minus.im).abs() <= 1e-9 * (1.0 + plus.im.abs()));
    }

    #[test]
    fn ks_of_a_sample_with_itself_is_zero(
        xs in prop::collection::vec(-100.0f64..100.0, 1..200)
    ) {
        let ks = ks_two_sample(&xs, &xs).unwrap();
        prop_assert_eq!(ks.distance, 0.0);
    }
}

/// The mirrored law runs the mirrored walk: `X'` under `reflect(L)` has
/// the law of `-X` under `L`. Checked at the statistic level on the
/// endpoint of a fixed even horizon.
#[test]
fn reflected_law_negates_the_walk_in_distribution() {
    let law = EnvironmentLaw::new(
        2,
        vec![(vec![0.9, 0.2], 0.3), (vec![0.4, 0.7], 0.7)],
    )
    .unwrap();
    let mirrored = law.reflected();
    let horizon = 50u64;
    let reps = 100_000u64;
    let config = WalkConfig::horizon(horizon);

    let ctx_a = erw::rng::context_id("props.reflect.a");
    let ctx_b = erw::rng::context_id("props.reflect.b");
    let mut original = Vec::with_capacity(reps as usize);
    let mut negated_mirror = Vec::with_capacity(reps as usize);
    for rep in 0..reps {
        let a = simulate_walk(&law, &config, erw::rng::stream_seed(77, ctx_a, rep));
        original.push(a.final_position as f64);
        let b = simulate_walk(&mirrored, &config, erw::rng::stream_seed(77, ctx_b, rep));
        negated_mirror.push(-b.final_position as f64);
    }
    let ks = ks_two_sample(&original, &negated_mirror).unwrap();
    assert!(ks.distance < 0.01, "ks distance {}", ks.distance);
}
