//! The experiment registry: one entry per acceptance criterion, each with
//! pinned laws, sample sizes, thresholds, and seeds.

use super::jsonl::{self, BranchingRow, DiffusionRow, WalkRow};
use super::{Check, ExperimentDef, ExperimentEnv, Report};
use crate::branching::{
    self, exact_v1_pmf, renewal_cycles, run_to_extinction, BranchingConfig,
};
use crate::diffusion::{
    simulate_y, tail_experiment, verify_scaling, DiffusionConfig, PathFunctional,
};
use crate::env::{CookieStack, EnvironmentLaw};
use crate::rng::{context_id, rep_rng, stream_seed};
use crate::stats::{
    self, chi_square_gof, fit_tail_exponent, gaussian_regime_check, ks_two_sample,
    normalize_passage_times, weakcon_check, TailFitConfig, TailMethod, WeakconFunctional,
};
use crate::walk::{estimate_speed, simulate_walk, StopRule, WalkConfig};
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Rows written per samples.jsonl file; heavier experiments are
/// downsampled to this many reps (by rep index, so files are identical
/// under any worker count).
const MAX_ROWS: usize = 100_000;

// Laws used by the acceptance criteria (deltas follow from the drift sum).
pub fn law_l15() -> EnvironmentLaw {
    EnvironmentLaw::single(vec![0.875, 0.875]).expect("valid law") // delta 1.5
}

pub fn law_l24() -> EnvironmentLaw {
    EnvironmentLaw::single(vec![0.9, 0.9, 0.9]).expect("valid law") // delta 2.4
}

pub fn law_l45() -> EnvironmentLaw {
    EnvironmentLaw::single(vec![0.95; 5]).expect("valid law") // delta 4.5
}

pub fn law_recurrent() -> EnvironmentLaw {
    EnvironmentLaw::single(vec![0.75]).expect("valid law") // delta 0.5
}

pub fn law_boundary4() -> EnvironmentLaw {
    EnvironmentLaw::single(vec![0.9; 5]).expect("valid law") // delta 4.0
}

pub fn law_mixed_drift() -> EnvironmentLaw {
    EnvironmentLaw::single(vec![0.9, 0.8, 0.7]).expect("valid law") // delta 1.8
}

/// The full registry in execution order.
pub fn registry() -> Vec<ExperimentDef> {
    vec![
        ExperimentDef {
            id: "AC1",
            title: "drift identity of the cookie block",
            default_seed: 2024,
            gating: true,
            runner: ac1_drift_identity,
        },
        ExperimentDef {
            id: "AC2",
            title: "one-step simulator vs exact pmf",
            default_seed: 2024,
            gating: true,
            runner: ac2_one_step_oracle,
        },
        ExperimentDef {
            id: "AC3",
            title: "extinction-time tail exponent",
            default_seed: 2024,
            gating: true,
            runner: ac3_extinction_tail,
        },
        ExperimentDef {
            id: "AC4",
            title: "total-progeny tail exponent",
            default_seed: 2024,
            gating: true,
            runner: ac4_progeny_tail,
        },
        ExperimentDef {
            id: "AC5",
            title: "reversed-process identity",
            default_seed: 2024,
            gating: true,
            runner: ac5_reversed_identity,
        },
        ExperimentDef {
            id: "AC6",
            title: "speed cross-check (walk vs renewal)",
            default_seed: 2024,
            gating: true,
            runner: ac6_speed_cross_check,
        },
        ExperimentDef {
            id: "AC7",
            title: "stable regime normalization",
            default_seed: 2024,
            gating: true,
            runner: ac7_stable_normalization,
        },
        ExperimentDef {
            id: "AC8",
            title: "sub-ballistic growth exponent",
            default_seed: 2024,
            gating: true,
            runner: ac8_subballistic_growth,
        },
        ExperimentDef {
            id: "AC9",
            title: "diffusion hitting probabilities",
            default_seed: 2024,
            gating: true,
            runner: ac9_hitting_probabilities,
        },
        ExperimentDef {
            id: "AC10",
            title: "diffusion absorption and area tails",
            default_seed: 2024,
            gating: true,
            runner: ac10_diffusion_tails,
        },
        ExperimentDef {
            id: "AC11",
            title: "diffusion scaling law",
            default_seed: 2024,
            gating: true,
            runner: ac11_diffusion_scaling,
        },
        ExperimentDef {
            id: "AC12",
            title: "diffusion approximation of the chain",
            default_seed: 2024,
            gating: true,
            runner: ac12_diffusion_approximation,
        },
        ExperimentDef {
            id: "AC13",
            title: "gaussian regime",
            default_seed: 2024,
            gating: true,
            runner: ac13_gaussian_regime,
        },
        ExperimentDef {
            id: "AC14",
            title: "recurrence sanity",
            default_seed: 2024,
            gating: true,
            runner: ac14_recurrence,
        },
        ExperimentDef {
            id: "AC15",
            title: "delta = 4 boundary normalization",
            default_seed: 2024,
            gating: false,
            runner: ac15_boundary_normalization,
        },
    ]
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

/// First-passage times of `level` (dropping reps that exhaust the cap),
/// plus row summaries for the first `MAX_ROWS` reps.
fn passage_samples(
    law: &EnvironmentLaw,
    level: i64,
    reps: usize,
    cap: u64,
    master: u64,
    ctx: u64,
) -> (Vec<f64>, usize, Vec<WalkRow>) {
    let config = WalkConfig {
        stop: StopRule::FirstPassage {
            level,
            horizon: Some(cap),
        },
        ..Default::default()
    };
    let results: Vec<(Option<u64>, Option<WalkRow>)> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let record = simulate_walk(law, &config, stream_seed(master, ctx, rep));
            let t = record.reached_level().map(|(_, t)| t);
            let row = (rep < MAX_ROWS as u64)
                .then(|| WalkRow::from_record(rep, Some(level), &record));
            (t, row)
        })
        .collect();
    let dropped = results.iter().filter(|(t, _)| t.is_none()).count();
    let times = results
        .iter()
        .filter_map(|(t, _)| t.map(|t| t as f64))
        .collect();
    let rows = results.into_iter().filter_map(|(_, r)| r).collect();
    (times, dropped, rows)
}

fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn sample_sd(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Speed from first-passage means at two levels: differencing removes the
/// constant start-up cost, so `1/v = (E T_{n2} - E T_{n1}) / (n2 - n1)`.
fn speed_from_passage_means(n1: i64, mean1: f64, n2: i64, mean2: f64) -> f64 {
    (n2 - n1) as f64 / (mean2 - mean1)
}

// ---------------------------------------------------------------------------
// AC1: drift identity
// ---------------------------------------------------------------------------

fn ac1_drift_identity(env: &ExperimentEnv) -> Report {
    const REPS: u64 = 1_000_000;
    let law = law_mixed_drift();
    let target = 1.0 - law.delta(); // -0.8
    let ctx = context_id("AC1.block");
    let draws: Vec<f64> = (0..REPS)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rep_rng(env.seed, ctx, rep);
            branching::drift_block_sample(law.stack(0), &mut rng) as f64
        })
        .collect();
    let (mean, se) = mean_and_se(&draws);
    let checks = vec![Check::below(
        "abs_error_over_se",
        (mean - target).abs() / se,
        4.0,
    )];
    let notes = vec![format!(
        "mean {mean:.5} vs 1 - delta = {target:.5} (se {se:.5}, {REPS} draws)"
    )];
    Report::from_checks(
        "AC1",
        "drift identity of the cookie block",
        env.seed,
        true,
        checks,
        BTreeMap::new(),
        notes,
    )
}

// ---------------------------------------------------------------------------
// AC2: one-step oracle match
// ---------------------------------------------------------------------------

fn ac2_one_step_oracle(env: &ExperimentEnv) -> Report {
    const REPS: u64 = 1_000_000;
    const K_MAX: usize = 64;
    let cases: Vec<(&str, CookieStack, u64)> = vec![
        ("m0_v0", CookieStack::new(vec![]), 0),
        ("m1_v0", CookieStack::new(vec![0.7]), 0),
        ("m2_v1", CookieStack::new(vec![0.9, 0.8]), 1),
    ];
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    for (name, stack, v0) in &cases {
        let ctx = context_id(&format!("AC2.{name}"));
        let counts: Vec<u64> = (0..REPS)
            .into_par_iter()
            .fold(
                || vec![0u64; K_MAX + 2],
                |mut acc, rep| {
                    let mut rng = rep_rng(env.seed, ctx, rep);
                    let v = branching::step_v(*v0, stack, &mut rng) as usize;
                    acc[v.min(K_MAX + 1)] += 1;
                    acc
                },
            )
            .reduce(
                || vec![0u64; K_MAX + 2],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    a
                },
            );
        let exact = exact_v1_pmf(stack, *v0, K_MAX).expect("oracle case");
        let mut probs = exact.pmf.clone();
        probs.push(exact.tail);
        let gof = chi_square_gof(&counts, &probs, 5.0).expect("partition");
        checks.push(Check {
            name: format!("chi2_p_{name}"),
            measured: gof.p_value,
            requirement: "> 0.001".into(),
            passed: gof.p_value > 0.001,
        });
        notes.push(format!(
            "{name}: chi2 = {:.2} on {} dof, p = {:.4}",
            gof.statistic, gof.dof, gof.p_value
        ));
    }
    Report::from_checks(
        "AC2",
        "one-step simulator vs exact pmf",
        env.seed,
        true,
        checks,
        BTreeMap::new(),
        notes,
    )
}

// ---------------------------------------------------------------------------
// AC3 / AC4: extinction-time and total-progeny tails
// ---------------------------------------------------------------------------

fn extinction_runs(
    env: &ExperimentEnv,
    runs: u64,
    ctx: u64,
) -> (Vec<Option<u64>>, Vec<u64>, u64, Vec<BranchingRow>) {
    let law = law_l15();
    let config = BranchingConfig::default();
    let results: Vec<(Option<u64>, u64, bool, Option<BranchingRow>)> = (0..runs)
        .into_par_iter()
        .map(|rep| {
            let run = run_to_extinction(&law, 0, &config, stream_seed(env.seed, ctx, rep));
            let row = (rep < MAX_ROWS as u64).then(|| BranchingRow::from_run(rep, &run));
            (run.sigma0, run.progeny, run.censored, row)
        })
        .collect();
    let censored = results.iter().filter(|(_, _, c, _)| *c).count() as u64;
    let sigmas = results.iter().map(|(s, _, _, _)| *s).collect();
    let progenies = results
        .iter()
        .filter(|(s, _, _, _)| s.is_some())
        .map(|(_, p, _, _)| *p)
        .collect();
    let rows = results.into_iter().filter_map(|(_, _, _, r)| r).collect();
    (sigmas, progenies, censored, rows)
}

fn ac3_extinction_tail(env: &ExperimentEnv) -> Report {
    const RUNS: u64 = 10_000_000;
    let ctx = context_id("AC3.runs");
    let (sigmas, _, censored, rows) = extinction_runs(env, RUNS, ctx);
    let samples: Vec<f64> = sigmas.iter().flatten().map(|s| *s as f64).collect();
    let fit = fit_tail_exponent(
        &samples,
        TailMethod::LoglogSurvival,
        &TailFitConfig {
            range: Some((30.0, 3000.0)),
            ..Default::default()
        },
    )
    .expect("extinction tail fit");
    if let Some(path) = env.artifact("samples.jsonl") {
        let _ = jsonl::write_rows(&path, &rows);
    }
    if let Some(path) = env.artifact("survival.csv") {
        let _ = jsonl::write_survival_csv(&path, &samples, (1.0, 10_000.0), 40);
    }
    let checks = vec![
        Check::window("exponent", fit.exponent, 1.2, 1.8),
        Check::below("censored_fraction", censored as f64 / RUNS as f64, 0.001),
    ];
    let notes = vec![format!(
        "{RUNS} runs; survival fit over n in [30, 3000]: {:.3} +- {:.3} ({} exceedances at top, curvature {:.3})",
        fit.exponent, fit.stderr, fit.n_exceed, fit.curvature
    )];
    Report::from_checks(
        "AC3",
        "extinction-time tail exponent",
        env.seed,
        true,
        checks,
        BTreeMap::from([("censored_runs".to_string(), censored)]),
        notes,
    )
}

fn ac4_progeny_tail(env: &ExperimentEnv) -> Report {
    const RUNS: u64 = 10_000_000;
    let ctx = context_id("AC4.runs");
    let (_, progenies, censored, rows) = extinction_runs(env, RUNS, ctx);
    let samples: Vec<f64> = progenies.iter().map(|p| *p as f64).collect();
    let fit = fit_tail_exponent(
        &samples,
        TailMethod::LoglogSurvival,
        &TailFitConfig {
            range: Some((1e2, 1e5)),
            ..Default::default()
        },
    )
    .expect("progeny tail fit");
    if let Some(path) = env.artifact("samples.jsonl") {
        let _ = jsonl::write_rows(&path, &rows);
    }
    if let Some(path) = env.artifact("survival.csv") {
        let _ = jsonl::write_survival_csv(&path, &samples, (1.0, 1e6), 40);
    }
    let checks = vec![
        Check::window("exponent", fit.exponent, 0.60, 0.90),
        Check::below("censored_fraction", censored as f64 / RUNS as f64, 0.001),
    ];
    let notes = vec![format!(
        "{RUNS} runs; survival fit over [1e2, 1e5]: {:.3} +- {:.3} (target 0.75, curvature {:.3})",
        fit.exponent, fit.stderr, fit.curvature
    )];
    Report::from_checks(
        "AC4",
        "total-progeny tail exponent",
        env.seed,
        true,
        checks,
        BTreeMap::from([("censored_runs".to_string(), censored)]),
        notes,
    )
}

// ---------------------------------------------------------------------------
// AC5: reversed-process identity
// ---------------------------------------------------------------------------

fn ac5_reversed_identity(env: &ExperimentEnv) -> Report {
    const N: i64 = 20;
    const REPS: usize = 100_000;
    const CAP: u64 = 1_000_000;
    let law = law_l15();
    let ks_levels = [0i64, 10, 19];
    let samples =
        branching::reversed_identity_samples(&law, N, &ks_levels, REPS, CAP, env.seed);
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    for (i, k) in ks_levels.iter().enumerate() {
        let walk: Vec<f64> = samples.walk[i].iter().map(|d| *d as f64).collect();
        let chain: Vec<f64> = samples.branching[i].iter().map(|v| *v as f64).collect();
        let ks = ks_two_sample(&walk, &chain).expect("nonempty samples");
        checks.push(Check::below(&format!("ks_k{k}"), ks.distance, 0.01));
        let (mw, sw) = mean_and_se(&walk);
        let (mc, sc) = mean_and_se(&chain);
        let combined = (sw * sw + sc * sc).sqrt();
        notes.push(format!(
            "k={k}: D_nk mean {mw:.4}, V_(n-k) mean {mc:.4} (diff/se {:.2}), ks {:.5}",
            (mw - mc).abs() / combined,
            ks.distance
        ));
    }
    Report::from_checks(
        "AC5",
        "reversed-process identity",
        env.seed,
        true,
        checks,
        BTreeMap::from([(
            "walks_dropped".to_string(),
            samples.dropped_walks as u64,
        )]),
        notes,
    )
}

// ---------------------------------------------------------------------------
// AC6: speed cross-check
// ---------------------------------------------------------------------------

fn ac6_speed_cross_check(env: &ExperimentEnv) -> Report {
    const WALK_STEPS: u64 = 1_000_000;
    const WALK_REPS: usize = 100;
    const CYCLES: usize = 20_000_000;
    let law = law_l24();
    let walk = estimate_speed(&law, WALK_STEPS, WALK_REPS, stream_seed(env.seed, context_id("AC6.walk"), 0));
    let renewal = renewal_cycles(
        &law,
        CYCLES,
        &BranchingConfig::default(),
        stream_seed(env.seed, context_id("AC6.renewal"), 0),
    );
    let v_renewal = renewal.speed();
    let rel = (walk.v_hat - v_renewal).abs() / v_renewal;

    let placebo = EnvironmentLaw::placebo(1);
    let zero = estimate_speed(
        &placebo,
        100_000,
        200,
        stream_seed(env.seed, context_id("AC6.placebo"), 0),
    );

    let checks = vec![
        Check::below("relative_disagreement", rel, 0.02),
        Check::below("placebo_speed_over_se", zero.v_hat.abs() / zero.stderr, 4.0),
    ];
    let notes = vec![
        format!(
            "walk v {:.5} (se {:.5}); renewal v {:.5} over {} cycles (lambda {:.4}, mean progeny {:.2})",
            walk.v_hat,
            walk.stderr,
            v_renewal,
            renewal.n_cycles(),
            renewal.lambda_hat(),
            renewal.mean_progeny()
        ),
        format!("placebo v {:.6} (se {:.6})", zero.v_hat, zero.stderr),
    ];
    Report::from_checks(
        "AC6",
        "speed cross-check (walk vs renewal)",
        env.seed,
        true,
        checks,
        BTreeMap::from([("censored_cycles".to_string(), renewal.censored as u64)]),
        notes,
    )
}

// ---------------------------------------------------------------------------
// AC7: stable regime normalization
// ---------------------------------------------------------------------------

fn ac7_stable_normalization(env: &ExperimentEnv) -> Report {
    const N1: i64 = 10_000;
    const N2: i64 = 40_000;
    const REPS: usize = 100_000;
    const CAP: u64 = 100_000_000;
    let law = law_l24();
    let delta = law.delta();
    let (t1, dropped1, rows1) =
        passage_samples(&law, N1, REPS, CAP, env.seed, context_id("AC7.n1"));
    let (t2, dropped2, rows2) =
        passage_samples(&law, N2, REPS, CAP, env.seed, context_id("AC7.n2"));
    let (mean1, _) = mean_and_se(&t1);
    let (mean2, _) = mean_and_se(&t2);
    let v_hat = speed_from_passage_means(N1, mean1, N2, mean2);

    let norm1 = normalize_passage_times(&t1, N1 as u64, v_hat, delta).expect("stable regime");
    let norm2 = normalize_passage_times(&t2, N2 as u64, v_hat, delta).expect("stable regime");

    let positives: Vec<f64> = norm1.iter().copied().filter(|x| *x > 0.0).collect();
    let fit = fit_tail_exponent(
        &positives,
        TailMethod::LoglogSurvival,
        &TailFitConfig::default(),
    )
    .expect("normalized tail fit");
    let ks = ks_two_sample(&norm1, &norm2).expect("nonempty");

    if let Some(path) = env.artifact("samples.jsonl") {
        let _ = jsonl::write_rows(&path, &rows1);
    }
    if let Some(path) = env.artifact("samples_n2.jsonl") {
        let _ = jsonl::write_rows(&path, &rows2);
    }
    if let Some(path) = env.artifact("survival.csv") {
        let _ = jsonl::write_survival_csv(
            &path,
            &positives,
            (fit.range.0, fit.range.1.max(fit.range.0 * 2.0)),
            40,
        );
    }

    let checks = vec![
        Check::window("positive_tail_exponent", fit.exponent, 0.9, 1.5),
        Check::below("ks_between_scales", ks.distance, 0.05),
    ];
    let notes = vec![
        format!(
            "v_hat {v_hat:.5} by differencing passage means ({mean1:.0} at n={N1}, {mean2:.0} at n={N2})"
        ),
        format!(
            "normalized positive-tail exponent {:.3} +- {:.3} over [{:.2}, {:.2}] (target {:.2})",
            fit.exponent,
            fit.stderr,
            fit.range.0,
            fit.range.1,
            delta / 2.0
        ),
        format!("ks between n={N1} and n={N2} normalized samples: {:.4}", ks.distance),
    ];
    Report::from_checks(
        "AC7",
        "stable regime normalization",
        env.seed,
        true,
        checks,
        BTreeMap::from([
            ("walks_dropped_n1".to_string(), dropped1 as u64),
            ("walks_dropped_n2".to_string(), dropped2 as u64),
        ]),
        notes,
    )
}

// ---------------------------------------------------------------------------
// AC8: sub-ballistic growth
// ---------------------------------------------------------------------------

fn ac8_subballistic_growth(env: &ExperimentEnv) -> Report {
    const REPS: usize = 10_000;
    let law = law_l15();
    let report = stats::growth_exponent_subballistic(
        &law,
        &[1_000, 10_000, 100_000],
        REPS,
        stream_seed(env.seed, context_id("AC8"), 0),
    );
    let (lo, hi) = report.slope_diff_ci;
    let checks = vec![
        Check::window("median_growth_slope", report.slope_final, 0.70, 0.80),
        Check::boolean("sup_slope_within_joint_ci", lo <= 0.0 && 0.0 <= hi),
    ];
    let notes = vec![format!(
        "medians {:?} / sup {:?}; slopes {:.4} vs {:.4}; slope diff 99% CI [{:.4}, {:.4}]",
        report.median_final, report.median_sup, report.slope_final, report.slope_sup, lo, hi
    )];
    Report::from_checks(
        "AC8",
        "sub-ballistic growth exponent",
        env.seed,
        true,
        checks,
        BTreeMap::new(),
        notes,
    )
}

// ---------------------------------------------------------------------------
// AC9: diffusion hitting probabilities
// ---------------------------------------------------------------------------

fn hit_fraction(
    delta: f64,
    a: f64,
    b: f64,
    dt: f64,
    reps: u64,
    master: u64,
    ctx: u64,
    rows_out: Option<&mut Vec<DiffusionRow>>,
) -> (f64, u64) {
    let config = DiffusionConfig {
        levels: vec![a, b],
        stop_on_levels: true,
        dt,
        ..DiffusionConfig::new(delta, 1.0)
    };
    let want_rows = rows_out.is_some();
    let outcomes: Vec<(Option<bool>, Option<DiffusionRow>)> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let result = simulate_y(&config, stream_seed(master, ctx, rep));
            let verdict = match (result.level_hit(a), result.level_hit(b)) {
                (Some(ta), Some(tb)) => Some(ta < tb),
                (Some(_), None) => Some(true),
                (None, Some(_)) => Some(false),
                (None, None) => None,
            };
            let row = (want_rows && rep < MAX_ROWS as u64)
                .then(|| DiffusionRow::from_result(rep, &result));
            (verdict, row)
        })
        .collect();
    let decided = outcomes.iter().filter(|(v, _)| v.is_some()).count() as u64;
    let hit_a = outcomes.iter().filter(|(v, _)| *v == Some(true)).count() as u64;
    if let Some(rows) = rows_out {
        rows.extend(outcomes.into_iter().filter_map(|(_, r)| r));
    }
    (hit_a as f64 / decided as f64, reps - decided)
}

fn ac9_hitting_probabilities(env: &ExperimentEnv) -> Report {
    const REPS: u64 = 100_000;
    const REPS_REFINE: usize = 200_000;
    let (delta, a, b) = (2.5, 0.5, 2.0);
    let closed_form = crate::diffusion::hitting_prob(1.0, a, b, delta).expect("valid args");
    let mut rows = Vec::new();
    let (p_main, undecided_main) = hit_fraction(
        delta,
        a,
        b,
        1e-4,
        REPS,
        env.seed,
        context_id("AC9.main"),
        Some(&mut rows),
    );
    let se_main = (p_main * (1.0 - p_main) / REPS as f64).sqrt();
    // The dt/2 rerun shares its Brownian increments with the dt run, so
    // the shift it reports is the discretization bias itself.
    let refine = crate::diffusion::hit_prob_dt_refinement(
        delta,
        1.0,
        a,
        b,
        1e-4,
        1000.0,
        REPS_REFINE,
        stream_seed(env.seed, context_id("AC9.refine"), 0),
    )
    .expect("valid refinement args");
    if let Some(path) = env.artifact("samples.jsonl") {
        let _ = jsonl::write_rows(&path, &rows);
    }
    let checks = vec![
        Check::below("abs_error_vs_closed_form", (p_main - closed_form).abs(), 0.01),
        Check::below(
            "half_dt_shift_over_2se",
            (refine.p_coarse - refine.p_fine).abs() / (2.0 * se_main),
            1.0,
        ),
    ];
    let notes = vec![
        format!("closed form {closed_form:.5}; mc {p_main:.5} (se {se_main:.5}) at dt 1e-4"),
        format!(
            "coupled refinement: {:.5} at dt vs {:.5} at dt/2 ({} of {} outcomes differ)",
            refine.p_coarse, refine.p_fine, refine.disagreements, REPS_REFINE
        ),
    ];
    Report::from_checks(
        "AC9",
        "diffusion hitting probabilities",
        env.seed,
        true,
        checks,
        BTreeMap::from([
            ("undecided_main".to_string(), undecided_main),
            ("undecided_refinement".to_string(), refine.undecided as u64),
        ]),
        notes,
    )
}

// ---------------------------------------------------------------------------
// AC10: diffusion tails
// ---------------------------------------------------------------------------

fn ac10_diffusion_tails(env: &ExperimentEnv) -> Report {
    const REPS: usize = 150_000;
    let delta = 1.5;
    let tau = tail_experiment(
        delta,
        PathFunctional::AbsorptionTime,
        REPS,
        (2.0, 150.0),
        stream_seed(env.seed, context_id("AC10.tau"), 0),
    )
    .expect("tau tail");
    let area = tail_experiment(
        delta,
        PathFunctional::Area,
        REPS,
        (2.0, 100.0),
        stream_seed(env.seed, context_id("AC10.area"), 0),
    )
    .expect("area tail");
    let checks = vec![
        Check::window("tau0_exponent", tau.fit.exponent, 1.3, 1.7),
        Check::window("area_exponent", area.fit.exponent, 1.3, 1.7),
        Check::boolean("tau0_censoring_ok", !tau.censoring_flagged),
        Check::boolean("area_censoring_ok", !area.censoring_flagged),
    ];
    let notes = vec![
        format!(
            "tau0: {:.3} +- {:.3} over [{:.1}, {:.1}] ({} exceedances)",
            tau.fit.exponent, tau.fit.stderr, tau.fit.range.0, tau.fit.range.1, tau.fit.n_exceed
        ),
        format!(
            "sqrt(area): {:.3} +- {:.3} over [{:.1}, {:.1}] ({} exceedances)",
            area.fit.exponent,
            area.fit.stderr,
            area.fit.range.0,
            area.fit.range.1,
            area.fit.n_exceed
        ),
    ];
    Report::from_checks(
        "AC10",
        "diffusion absorption and area tails",
        env.seed,
        true,
        checks,
        BTreeMap::from([
            ("tau_censored".to_string(), tau.censored as u64),
            ("area_censored".to_string(), area.censored as u64),
        ]),
        notes,
    )
}

// ---------------------------------------------------------------------------
// AC11: diffusion scaling
// ---------------------------------------------------------------------------

fn ac11_diffusion_scaling(env: &ExperimentEnv) -> Report {
    const REPS: usize = 100_000;
    let (y, delta) = (4.0, 1.5);
    let tau = verify_scaling(
        y,
        delta,
        PathFunctional::AbsorptionTime,
        REPS,
        stream_seed(env.seed, context_id("AC11.tau"), 0),
    )
    .expect("scaling tau");
    let area = verify_scaling(
        y,
        delta,
        PathFunctional::Area,
        REPS,
        stream_seed(env.seed, context_id("AC11.area"), 0),
    )
    .expect("scaling area");
    let checks = vec![
        Check::below("ks_tau_scaled", tau.ks.distance, 0.02),
        Check::below("ks_area_scaled", area.ks.distance, 0.02),
    ];
    let notes = vec![format!(
        "tau0/y vs tau0(Y1): ks {:.4}; area/y^2 vs area(Y1): ks {:.4} ({} paths/side)",
        tau.ks.distance, area.ks.distance, REPS
    )];
    Report::from_checks(
        "AC11",
        "diffusion scaling law",
        env.seed,
        true,
        checks,
        BTreeMap::from([
            ("tau_censored_scaled".to_string(), tau.censored_scaled as u64),
            ("tau_censored_unit".to_string(), tau.censored_unit as u64),
        ]),
        notes,
    )
}

// ---------------------------------------------------------------------------
// AC12: diffusion approximation (weak convergence functional)
// ---------------------------------------------------------------------------

fn ac12_diffusion_approximation(env: &ExperimentEnv) -> Report {
    const REPS: usize = 10_000;
    let law = law_l15();
    let coarse = weakcon_check(
        &law,
        0.1,
        1.0,
        1_000,
        WeakconFunctional::HittingTime,
        REPS,
        stream_seed(env.seed, context_id("AC12.n1e3"), 0),
    )
    .expect("weakcon coarse");
    let fine = weakcon_check(
        &law,
        0.1,
        1.0,
        10_000,
        WeakconFunctional::HittingTime,
        REPS,
        stream_seed(env.seed, context_id("AC12.n1e4"), 0),
    )
    .expect("weakcon fine");
    // KS noise scale at these sample sizes; the trend check allows it.
    let noise = 3.0 * (2.0 / REPS as f64).sqrt();
    let checks = vec![
        Check::below("ks_at_n1e4", fine.distance, 0.05),
        Check::below(
            "ks_trend_fine_minus_coarse",
            fine.distance - coarse.distance,
            noise,
        ),
    ];
    let notes = vec![format!(
        "hitting-time ks: {:.4} at n=1e3, {:.4} at n=1e4 ({} reps/side, noise allowance {:.4})",
        coarse.distance, fine.distance, REPS, noise
    )];
    Report::from_checks(
        "AC12",
        "diffusion approximation of the chain",
        env.seed,
        true,
        checks,
        BTreeMap::from([
            ("branching_censored".to_string(), fine.branching_censored as u64),
            ("diffusion_censored".to_string(), fine.diffusion_censored as u64),
        ]),
        notes,
    )
}

// ---------------------------------------------------------------------------
// AC13: gaussian regime
// ---------------------------------------------------------------------------

fn ac13_gaussian_regime(env: &ExperimentEnv) -> Report {
    const N: u64 = 100_000;
    const REPS: usize = 10_000;
    let law = law_l45();
    let check = gaussian_regime_check(
        &law,
        N,
        REPS,
        stream_seed(env.seed, context_id("AC13"), 0),
    )
    .expect("gaussian check");
    let checks = vec![Check::below("ks_to_normal", check.ks_distance, 0.02)];
    let notes = vec![format!(
        "studentized X_n at n={N}: ks {:.4} (v_hat {:.4}, sd {:.1})",
        check.ks_distance, check.v_hat, check.sd
    )];
    Report::from_checks(
        "AC13",
        "gaussian regime",
        env.seed,
        true,
        checks,
        BTreeMap::new(),
        notes,
    )
}

// ---------------------------------------------------------------------------
// AC14: recurrence sanity
// ---------------------------------------------------------------------------

fn ac14_recurrence(env: &ExperimentEnv) -> Report {
    const WALKS: u64 = 10_000;
    const HORIZON: u64 = 1_000_000;
    let law = law_recurrent();
    let ctx = context_id("AC14");
    let config = WalkConfig {
        stop: StopRule::FirstReturn { horizon: HORIZON },
        ..Default::default()
    };
    let returned = (0..WALKS)
        .into_par_iter()
        .filter(|rep| {
            let record = simulate_walk(&law, &config, stream_seed(env.seed, ctx, *rep));
            matches!(
                record.stop_reason,
                crate::walk::StopReason::ReturnedToOrigin { .. }
            )
        })
        .count() as u64;
    let fraction = returned as f64 / WALKS as f64;
    let checks = vec![Check::at_least("return_fraction", fraction, 0.95)];
    let notes = vec![format!(
        "{returned} of {WALKS} walks returned to 0 within {HORIZON} steps"
    )];
    Report::from_checks(
        "AC14",
        "recurrence sanity",
        env.seed,
        true,
        checks,
        BTreeMap::new(),
        notes,
    )
}

// ---------------------------------------------------------------------------
// AC15: delta = 4 boundary (diagnostic)
// ---------------------------------------------------------------------------

fn ac15_boundary_normalization(env: &ExperimentEnv) -> Report {
    const N1: i64 = 10_000;
    const N2: i64 = 100_000;
    const REPS1: usize = 20_000;
    const REPS2: usize = 4_000;
    const CAP: u64 = 100_000_000;
    let law = law_boundary4();
    let (t1, dropped1, _) =
        passage_samples(&law, N1, REPS1, CAP, env.seed, context_id("AC15.n1"));
    let (t2, dropped2, _) =
        passage_samples(&law, N2, REPS2, CAP, env.seed, context_id("AC15.n2"));
    let (mean1, _) = mean_and_se(&t1);
    let (mean2, _) = mean_and_se(&t2);
    let v_hat = speed_from_passage_means(N1, mean1, N2, mean2);
    let norm1 = normalize_passage_times(&t1, N1 as u64, v_hat, 4.0).expect("delta 4 branch");
    let norm2 = normalize_passage_times(&t2, N2 as u64, v_hat, 4.0).expect("delta 4 branch");
    let sd1 = sample_sd(&norm1);
    let sd2 = sample_sd(&norm2);
    let ratio = (sd1 / sd2).max(sd2 / sd1);
    let checks = vec![Check::below("sd_ratio", ratio, 1.5)];
    let notes = vec![format!(
        "sd of (T - n/v)/sqrt(n ln n): {sd1:.3} at n={N1}, {sd2:.3} at n={N2} (v_hat {v_hat:.4}); diagnostic only"
    )];
    Report::from_checks(
        "AC15",
        "delta = 4 boundary normalization",
        env.seed,
        false,
        checks,
        BTreeMap::from([
            ("walks_dropped_n1".to_string(), dropped1 as u64),
            ("walks_dropped_n2".to_string(), dropped2 as u64),
        ]),
        notes,
    )
}
