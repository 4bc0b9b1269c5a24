//! The branching process `V` with one immigrant per generation.
//!
//! One generation maps the current population `v` to the number of
//! "failures" before the `(v + 1)`-th "success" in a fresh site's coin
//! sequence: the first `M` tosses follow the site's cookie stack, all
//! later tosses are fair. Reading the walk's backtrack counts in reverse
//! order reproduces exactly this chain, which is what makes `V` the
//! workhorse for passage-time tails.

use crate::env::{CookieStack, EnvironmentLaw};
use crate::rng::{context_id, rng_from_seed, stream_seed};
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BranchingError {
    #[error("exact pmf requires a start population of at most {max}; got {got}")]
    StartTooLarge { got: u64, max: u64 },
    #[error("exact pmf enumerates 2^M outcomes; M = {got} exceeds {max}")]
    StackTooDeep { got: usize, max: usize },
}

/// Failures before the first success in fair coin tossing, `Geom(1/2)` on
/// `{0, 1, ...}`. Exact: each random word contributes 64 fair bits, and an
/// all-zero word carries into the next.
pub fn sample_geometric_half<R: Rng + ?Sized>(rng: &mut R) -> u64 {
    let mut acc = 0u64;
    loop {
        let word: u64 = rng.random();
        if word != 0 {
            return acc + u64::from(word.trailing_zeros());
        }
        acc += 64;
    }
}

/// Threshold below which a negative binomial is sampled as a literal sum
/// of geometrics.
const NB_DIRECT_MAX: u64 = 32;

/// Failures before the `r`-th success in fair coin tossing: negative
/// binomial with `p = 1/2` on `{0, 1, ...}`. Small `r` sums geometrics;
/// large `r` uses the exact gamma-Poisson mixture, keeping the draw O(1)
/// in `r`.
pub fn sample_neg_binomial_half<R: Rng + ?Sized>(r: u64, rng: &mut R) -> u64 {
    if r == 0 {
        return 0;
    }
    if r <= NB_DIRECT_MAX {
        return (0..r).map(|_| sample_geometric_half(rng)).sum();
    }
    // NB(r, 1/2) is Poisson(lambda) with lambda ~ Gamma(r, scale (1-p)/p = 1).
    let gamma = Gamma::new(r as f64, 1.0).expect("valid gamma shape");
    let lambda: f64 = gamma.sample(rng).max(f64::MIN_POSITIVE);
    let poisson = Poisson::new(lambda).expect("positive lambda");
    poisson.sample(rng) as u64
}

/// Failures before the `m`-th success in a site's coin sequence: toss
/// through the cookie stack literally (the joint law of the first `M`
/// offspring counts is not i.i.d.), then aggregate the fair tail as a
/// single negative binomial draw.
pub fn sample_failures_before_successes<R: Rng + ?Sized>(
    m: u64,
    stack: &CookieStack,
    rng: &mut R,
) -> u64 {
    if m == 0 {
        return 0;
    }
    let mut successes = 0u64;
    let mut failures = 0u64;
    for p in stack.probs() {
        if rng.random::<f64>() < *p {
            successes += 1;
            if successes == m {
                return failures;
            }
        } else {
            failures += 1;
        }
    }
    failures + sample_neg_binomial_half(m - successes, rng)
}

/// One generation of `V` from population `v` on a fresh stack. O(M)
/// expected time regardless of `v`.
pub fn step_v<R: Rng + ?Sized>(v: u64, stack: &CookieStack, rng: &mut R) -> u64 {
    sample_failures_before_successes(v + 1, stack, rng)
}

/// One draw of the cookie-block drift functional
/// `(failures before the M-th success) - M + 1`; its mean is `1 - delta`.
pub fn drift_block_sample<R: Rng + ?Sized>(stack: &CookieStack, rng: &mut R) -> i64 {
    let m = stack.len() as u64;
    sample_failures_before_successes(m, stack, rng) as i64 - m as i64 + 1
}

/// Caps and logging switches for extinction runs.
#[derive(Debug, Clone)]
pub struct BranchingConfig {
    /// Censor after this many generations.
    pub max_generations: u64,
    /// Censor once the accumulated progeny exceeds this.
    pub max_progeny: u64,
    /// Keep the full population path.
    pub log_path: bool,
    /// Record `(x, V at first entry into [x, inf))` for these levels.
    pub overshoot_levels: Vec<u64>,
}

impl Default for BranchingConfig {
    fn default() -> Self {
        BranchingConfig {
            max_generations: 10_000_000,
            max_progeny: 10_000_000_000,
            log_path: false,
            overshoot_levels: Vec::new(),
        }
    }
}

/// One run of `V` to extinction (or a cap).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchingRun {
    pub seed: u64,
    pub v0: u64,
    /// First generation `k >= 1` with `V_k = 0`; `None` when censored.
    pub sigma0: Option<u64>,
    /// Total progeny before extinction: `V_0 + ... + V_{sigma0 - 1}`.
    pub progeny: u64,
    pub censored: bool,
    /// `(level, overshoot)` for each requested level reached before
    /// extinction.
    pub overshoots: Vec<(u64, u64)>,
    pub path: Option<Vec<u64>>,
}

/// Run `V` from `v0` until extinction or a cap, drawing a fresh stack from
/// the law each generation.
pub fn run_to_extinction(
    law: &EnvironmentLaw,
    v0: u64,
    config: &BranchingConfig,
    seed: u64,
) -> BranchingRun {
    let mut rng = rng_from_seed(seed);
    run_to_extinction_rng(law, v0, config, seed, &mut rng)
}

pub fn run_to_extinction_rng<R: Rng>(
    law: &EnvironmentLaw,
    v0: u64,
    config: &BranchingConfig,
    seed: u64,
    rng: &mut R,
) -> BranchingRun {
    // First entry into [x, inf) counts from generation 1, not the start.
    let mut levels = config.overshoot_levels.clone();
    levels.sort_unstable();
    levels.dedup();
    let mut next_level = 0usize;
    let mut overshoots: Vec<(u64, u64)> = Vec::new();
    let mut path = config.log_path.then(|| vec![v0]);

    let mut v = v0;
    let mut progeny = v0;
    let mut generation = 0u64;
    let (sigma0, censored) = loop {
        if generation >= config.max_generations || progeny > config.max_progeny {
            break (None, true);
        }
        let atom = law.sample_atom(rng);
        v = step_v(v, law.stack(atom), rng);
        generation += 1;
        if let Some(p) = path.as_mut() {
            p.push(v);
        }
        while next_level < levels.len() && v >= levels[next_level] {
            overshoots.push((levels[next_level], v - levels[next_level]));
            next_level += 1;
        }
        if v == 0 {
            break (Some(generation), false);
        }
        progeny += v;
    };

    BranchingRun {
        seed,
        v0,
        sigma0,
        progeny,
        censored,
        overshoots,
        path,
    }
}

/// The population path `V_0, ..., V_n` (not stopped at zeros; the
/// immigrant keeps the chain alive).
pub fn simulate_v_path(
    law: &EnvironmentLaw,
    v0: u64,
    generations: u64,
    seed: u64,
) -> Vec<u64> {
    let mut rng = rng_from_seed(seed);
    let mut path = Vec::with_capacity(generations as usize + 1);
    let mut v = v0;
    path.push(v);
    for _ in 0..generations {
        let atom = law.sample_atom(&mut rng);
        v = step_v(v, law.stack(atom), &mut rng);
        path.push(v);
    }
    path
}

/// Run `V` from `v0` until it first drops to `threshold` or below (at a
/// generation `>= 1`), or until `max_generations`.
#[derive(Debug, Clone, Copy)]
pub struct StoppedRun {
    pub generation: u64,
    pub value: u64,
    pub hit_below: bool,
}

pub fn run_until_below<R: Rng>(
    law: &EnvironmentLaw,
    v0: u64,
    threshold: u64,
    max_generations: u64,
    rng: &mut R,
) -> StoppedRun {
    let mut v = v0;
    for generation in 1..=max_generations {
        let atom = law.sample_atom(rng);
        v = step_v(v, law.stack(atom), rng);
        if v <= threshold {
            return StoppedRun {
                generation,
                value: v,
                hit_below: true,
            };
        }
    }
    StoppedRun {
        generation: max_generations,
        value: v,
        hit_below: false,
    }
}

/// Exact one-step law of `V_1` given `V_0 = v0` on a deterministic stack:
/// probabilities on `{0, ..., k_max}` plus the mass beyond.
#[derive(Debug, Clone)]
pub struct ExactV1Pmf {
    pub pmf: Vec<f64>,
    pub tail: f64,
}

impl ExactV1Pmf {
    pub fn total_mass(&self) -> f64 {
        self.pmf.iter().sum::<f64>() + self.tail
    }
}

pub const EXACT_PMF_MAX_V0: u64 = 32;
pub const EXACT_PMF_MAX_M: usize = 24;

/// Enumerate the `2^M` cookie-toss outcomes and attach the exact fair-tail
/// negative binomial to each unfinished branch. Independent ground truth
/// for the one-step simulator.
pub fn exact_v1_pmf(
    stack: &CookieStack,
    v0: u64,
    k_max: usize,
) -> Result<ExactV1Pmf, BranchingError> {
    if v0 > EXACT_PMF_MAX_V0 {
        return Err(BranchingError::StartTooLarge {
            got: v0,
            max: EXACT_PMF_MAX_V0,
        });
    }
    if stack.len() > EXACT_PMF_MAX_M {
        return Err(BranchingError::StackTooDeep {
            got: stack.len(),
            max: EXACT_PMF_MAX_M,
        });
    }
    let needed = v0 + 1;
    let mut out = ExactV1Pmf {
        pmf: vec![0.0; k_max + 1],
        tail: 0.0,
    };

    // NB(r, 1/2) pmf table on {0..k_max}: row r built by recurrence
    // pmf(k) = pmf(k-1) * (k + r - 1) / (2k).
    let nb_row = |r: u64| -> Vec<f64> {
        let mut row = Vec::with_capacity(k_max + 1);
        let mut val = 0.5f64.powi(r as i32);
        row.push(val);
        for k in 1..=k_max {
            val *= (k as f64 + r as f64 - 1.0) / (2.0 * k as f64);
            row.push(val);
        }
        row
    };

    fn recurse(
        stack: &CookieStack,
        needed: u64,
        toss: usize,
        successes: u64,
        failures: u64,
        prob: f64,
        out: &mut ExactV1Pmf,
        nb_row: &dyn Fn(u64) -> Vec<f64>,
    ) {
        if prob == 0.0 {
            return;
        }
        if successes == needed {
            let f = failures as usize;
            if f < out.pmf.len() {
                out.pmf[f] += prob;
            } else {
                out.tail += prob;
            }
            return;
        }
        if toss == stack.len() {
            let f = failures as usize;
            if f >= out.pmf.len() {
                out.tail += prob;
                return;
            }
            let row = nb_row(needed - successes);
            let mut assigned = 0.0;
            for (k, nb) in row.iter().enumerate().take(out.pmf.len() - f) {
                out.pmf[f + k] += prob * nb;
                assigned += nb;
            }
            out.tail += prob * (1.0 - assigned);
            return;
        }
        let p = stack.probs()[toss];
        recurse(stack, needed, toss + 1, successes + 1, failures, prob * p, out, nb_row);
        recurse(
            stack,
            needed,
            toss + 1,
            successes,
            failures + 1,
            prob * (1.0 - p),
            out,
            nb_row,
        );
    }

    recurse(stack, needed, 0, 0, 0, 1.0, &mut out, &nb_row);
    Ok(out)
}

/// Independent renewal cycles of `V` from zero: lifetime and progeny of
/// each excursion between successive zeros.
#[derive(Debug, Clone)]
pub struct RenewalSample {
    pub lengths: Vec<u64>,
    pub progenies: Vec<u64>,
    pub censored: usize,
}

impl RenewalSample {
    pub fn n_cycles(&self) -> usize {
        self.lengths.len()
    }

    pub fn mean_length(&self) -> f64 {
        self.lengths.iter().map(|l| *l as f64).sum::<f64>() / self.lengths.len() as f64
    }

    pub fn mean_progeny(&self) -> f64 {
        self.progenies.iter().map(|p| *p as f64).sum::<f64>() / self.progenies.len() as f64
    }

    /// Renewal rate `1 / E[cycle length]`.
    pub fn lambda_hat(&self) -> f64 {
        1.0 / self.mean_length()
    }

    /// Walk speed solving `E[S] = (1/v - 1) / (2 lambda)`.
    pub fn speed(&self) -> f64 {
        1.0 / (1.0 + 2.0 * self.mean_progeny() / self.mean_length())
    }
}

fn renewal_ctx() -> u64 {
    static CTX: OnceLock<u64> = OnceLock::new();
    *CTX.get_or_init(|| context_id("branching.renewal_cycles"))
}

pub fn renewal_cycles(
    law: &EnvironmentLaw,
    count: usize,
    config: &BranchingConfig,
    master_seed: u64,
) -> RenewalSample {
    let ctx = renewal_ctx();
    let runs: Vec<(Option<u64>, u64)> = (0..count as u64)
        .into_par_iter()
        .map(|rep| {
            let run = run_to_extinction(law, 0, config, stream_seed(master_seed, ctx, rep));
            (run.sigma0, run.progeny)
        })
        .collect();
    let mut lengths = Vec::with_capacity(count);
    let mut progenies = Vec::with_capacity(count);
    let mut censored = 0;
    for (sigma0, progeny) in runs {
        match sigma0 {
            Some(len) => {
                lengths.push(len);
                progenies.push(progeny);
            }
            None => censored += 1,
        }
    }
    RenewalSample {
        lengths,
        progenies,
        censored,
    }
}

/// Paired samples for the reversed-process identity: for each requested
/// `k`, the walk's backtrack count `D_{n,k}` and the chain value
/// `V_{n-k}`, ready for two-sample testing.
#[derive(Debug)]
pub struct ReversedIdentitySamples {
    pub n: i64,
    pub k_values: Vec<i64>,
    /// `walk[i][r]` = `D_{n, k_values[i]}` in walk rep `r`.
    pub walk: Vec<Vec<u64>>,
    /// `branching[i][r]` = `V_{n - k_values[i]}` in chain rep `r`.
    pub branching: Vec<Vec<u64>>,
    pub dropped_walks: usize,
}

fn reversed_ctx() -> (u64, u64) {
    static CTX: OnceLock<(u64, u64)> = OnceLock::new();
    *CTX.get_or_init(|| {
        (
            context_id("branching.reversed_identity.walk"),
            context_id("branching.reversed_identity.chain"),
        )
    })
}

pub fn reversed_identity_samples(
    law: &EnvironmentLaw,
    n: i64,
    k_values: &[i64],
    reps: usize,
    walk_step_cap: u64,
    master_seed: u64,
) -> ReversedIdentitySamples {
    use crate::walk::{simulate_walk, StopRule, WalkConfig};
    assert!(k_values.iter().all(|k| (0..=n).contains(k)));
    let (walk_ctx, chain_ctx) = reversed_ctx();

    let walk_config = WalkConfig {
        stop: StopRule::FirstPassage {
            level: n,
            horizon: Some(walk_step_cap),
        },
        track_backtracks: true,
        ..Default::default()
    };
    let walk_rows: Vec<Option<Vec<u64>>> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let record = simulate_walk(
                law,
                &walk_config,
                stream_seed(master_seed, walk_ctx, rep),
            );
            record.reached_level()?;
            let bt = record.backtracks.as_ref().expect("tracking enabled");
            Some(k_values.iter().map(|k| bt.at(*k)).collect())
        })
        .collect();

    let chain_rows: Vec<Vec<u64>> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let path = simulate_v_path(
                law,
                0,
                n as u64,
                stream_seed(master_seed, chain_ctx, rep),
            );
            k_values.iter().map(|k| path[(n - k) as usize]).collect()
        })
        .collect();

    let dropped_walks = walk_rows.iter().filter(|r| r.is_none()).count();
    let mut walk = vec![Vec::new(); k_values.len()];
    for row in walk_rows.into_iter().flatten() {
        for (i, d) in row.into_iter().enumerate() {
            walk[i].push(d);
        }
    }
    let mut branching = vec![Vec::new(); k_values.len()];
    for row in chain_rows {
        for (i, v) in row.into_iter().enumerate() {
            branching[i].push(v);
        }
    }
    ReversedIdentitySamples {
        n,
        k_values: k_values.to_vec(),
        walk,
        branching,
        dropped_walks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use approx::assert_abs_diff_eq;

    #[test]
    fn geometric_half_moments() {
        let mut rng = rng_from_seed(1);
        let n = 1_000_000;
        let sum: u64 = (0..n).map(|_| sample_geometric_half(&mut rng)).sum();
        let mean = sum as f64 / n as f64;
        // Mean 1, variance 2: SE = sqrt(2/n).
        assert!((mean - 1.0).abs() < 4.0 * (2.0f64 / n as f64).sqrt());
    }

    #[test]
    fn neg_binomial_paths_agree_on_moments() {
        // The direct-sum and gamma-Poisson paths sample the same law.
        let mut rng = rng_from_seed(2);
        let r = 100u64; // gamma-Poisson path
        let n = 200_000;
        let mean = (0..n)
            .map(|_| sample_neg_binomial_half(r, &mut rng) as f64)
            .sum::<f64>()
            / n as f64;
        // NB(r, 1/2): mean r, variance 2r.
        let se = (2.0 * r as f64 / n as f64).sqrt();
        assert!((mean - r as f64).abs() < 4.0 * se, "mean {mean}");
    }

    #[test]
    fn step_on_pure_placebo_is_negative_binomial() {
        // With no cookies every generation is a sum of v + 1 fair
        // geometrics: mean v + 1, variance 2 (v + 1).
        let stack = CookieStack::new(vec![]);
        let mut rng = rng_from_seed(6);
        let v = 100u64;
        let n = 200_000;
        let mean = (0..n)
            .map(|_| step_v(v, &stack, &mut rng) as f64)
            .sum::<f64>()
            / n as f64;
        let se = (2.0 * (v as f64 + 1.0) / n as f64).sqrt();
        assert!(
            (mean - (v as f64 + 1.0)).abs() < 4.0 * se,
            "mean {mean} vs {}",
            v + 1
        );
    }

    #[test]
    fn failures_on_all_ones_stack_is_zero() {
        let stack = CookieStack::new(vec![1.0, 1.0, 1.0]);
        let mut rng = rng_from_seed(3);
        for m in 1..=3 {
            assert_eq!(sample_failures_before_successes(m, &stack, &mut rng), 0);
        }
    }

    #[test]
    fn empty_stack_single_success_is_geometric() {
        let stack = CookieStack::new(vec![]);
        let mut rng = rng_from_seed(4);
        let n = 1_000_000;
        let mean = (0..n)
            .map(|_| sample_failures_before_successes(1, &stack, &mut rng) as f64)
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 4.0 * (2.0f64 / n as f64).sqrt());
    }

    #[test]
    fn step_v_mean_drift_matches_one_minus_delta() {
        // E[V_1 - v | V_0 = v] = 1 - delta for v >= M - 1.
        let law = EnvironmentLaw::single(vec![0.9, 0.8, 0.7]).unwrap();
        let stack = law.stack(0);
        let delta = law.delta();
        let mut rng = rng_from_seed(5);
        let v = 50u64;
        let n = 400_000;
        let mut sum = 0f64;
        let mut sumsq = 0f64;
        for _ in 0..n {
            let diff = step_v(v, stack, &mut rng) as f64 - v as f64;
            sum += diff;
            sumsq += diff * diff;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        let se = (var / n as f64).sqrt();
        assert!(
            (mean - (1.0 - delta)).abs() < 4.0 * se,
            "mean {mean} vs {}",
            1.0 - delta
        );
    }

    #[test]
    fn extinction_on_all_ones_law() {
        // With v0 + 1 <= M every coin in play is a certain success, so the
        // whole generation produces no offspring at all.
        let law = EnvironmentLaw::single(vec![1.0; 8]).unwrap();
        for v0 in [0u64, 3, 7] {
            let run = run_to_extinction(&law, v0, &BranchingConfig::default(), v0 ^ 9);
            assert_eq!(run.sigma0, Some(1));
            assert_eq!(run.progeny, v0);
            assert!(!run.censored);
        }
    }

    #[test]
    fn progeny_matches_logged_path() {
        let law = EnvironmentLaw::single(vec![0.875, 0.875]).unwrap();
        let config = BranchingConfig {
            log_path: true,
            ..Default::default()
        };
        for seed in 0..200 {
            let run = run_to_extinction(&law, 0, &config, seed);
            let path = run.path.as_ref().unwrap();
            let sigma = run.sigma0.unwrap() as usize;
            assert_eq!(path[sigma], 0);
            let total: u64 = path[..sigma].iter().sum();
            assert_eq!(total, run.progeny, "seed {seed}");
        }
    }

    #[test]
    fn censoring_is_flagged_not_fatal() {
        let law = EnvironmentLaw::single(vec![0.875, 0.875]).unwrap();
        let config = BranchingConfig {
            max_generations: 2,
            ..Default::default()
        };
        let mut saw_censored = false;
        for seed in 0..50 {
            let run = run_to_extinction(&law, 5, &config, seed);
            if run.censored {
                assert_eq!(run.sigma0, None);
                saw_censored = true;
            }
        }
        assert!(saw_censored);
    }

    #[test]
    fn exact_pmf_pure_fair_is_geometric() {
        let pmf = exact_v1_pmf(&CookieStack::new(vec![]), 0, 30).unwrap();
        for (k, p) in pmf.pmf.iter().enumerate() {
            assert_abs_diff_eq!(*p, 0.5f64.powi(k as i32 + 1), epsilon = 1e-14);
        }
        assert_abs_diff_eq!(pmf.total_mass(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn exact_pmf_single_cookie() {
        let p = 0.7;
        let pmf = exact_v1_pmf(&CookieStack::new(vec![p]), 0, 40).unwrap();
        assert_abs_diff_eq!(pmf.pmf[0], p, epsilon = 1e-14);
        for k in 1..=40 {
            assert_abs_diff_eq!(
                pmf.pmf[k],
                (1.0 - p) * 0.5f64.powi(k as i32),
                epsilon = 1e-14
            );
        }
        assert_abs_diff_eq!(pmf.total_mass(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn exact_pmf_certain_stack_is_point_mass() {
        let pmf = exact_v1_pmf(&CookieStack::new(vec![1.0, 1.0]), 0, 5).unwrap();
        assert_abs_diff_eq!(pmf.pmf[0], 1.0);
        assert_abs_diff_eq!(pmf.tail, 0.0);
    }

    #[test]
    fn exact_pmf_short_truncation_reports_tail() {
        let pmf = exact_v1_pmf(&CookieStack::new(vec![0.5]), 3, 2).unwrap();
        assert!(pmf.tail > 0.1);
        assert_abs_diff_eq!(pmf.total_mass(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn exact_pmf_rejects_oversized_inputs() {
        assert!(exact_v1_pmf(&CookieStack::new(vec![0.5]), 100, 5).is_err());
        assert!(exact_v1_pmf(&CookieStack::placebo(30), 0, 5).is_err());
    }

    #[test]
    fn renewal_cycles_on_all_ones_law() {
        let law = EnvironmentLaw::single(vec![1.0]).unwrap();
        let sample = renewal_cycles(&law, 100, &BranchingConfig::default(), 17);
        assert_eq!(sample.censored, 0);
        assert!(sample.lengths.iter().all(|l| *l == 1));
        assert!(sample.progenies.iter().all(|p| *p == 0));
        assert_abs_diff_eq!(sample.lambda_hat(), 1.0);
        assert_abs_diff_eq!(sample.speed(), 1.0);
    }

    #[test]
    fn renewal_estimator_is_permutation_invariant() {
        let law = EnvironmentLaw::single(vec![0.9, 0.9, 0.9]).unwrap();
        let sample = renewal_cycles(&law, 2000, &BranchingConfig::default(), 23);
        let mut shuffled = sample.clone();
        shuffled.lengths.reverse();
        shuffled.progenies.reverse();
        assert_abs_diff_eq!(sample.speed(), shuffled.speed());
        assert_abs_diff_eq!(sample.lambda_hat(), shuffled.lambda_hat());
    }

    #[test]
    fn reversed_identity_trivial_k_equals_n() {
        let law = EnvironmentLaw::single(vec![0.875, 0.875]).unwrap();
        let samples = reversed_identity_samples(&law, 10, &[10], 200, 10_000_000, 31);
        assert!(samples.walk[0].iter().all(|d| *d == 0));
        assert!(samples.branching[0].iter().all(|v| *v == 0));
    }

    #[test]
    fn one_step_cost_is_flat_in_population() {
        use std::time::Instant;
        let stack = CookieStack::new(vec![0.9, 0.9, 0.9]);
        let mut rng = rng_from_seed(41);
        let time_steps = |v: u64, rng: &mut rand_chacha::ChaCha8Rng| {
            let reps = 3000;
            let start = Instant::now();
            let mut acc = 0u64;
            for _ in 0..reps {
                acc = acc.wrapping_add(step_v(v, &stack, rng));
            }
            std::hint::black_box(acc);
            start.elapsed().as_secs_f64()
        };
        // Warm up, then take the best of three to damp scheduler noise.
        time_steps(10, &mut rng);
        let small = (0..3).map(|_| time_steps(10, &mut rng)).fold(f64::MAX, f64::min);
        let large = (0..3)
            .map(|_| time_steps(1_000_000, &mut rng))
            .fold(f64::MAX, f64::min);
        assert!(
            large < 10.0 * small.max(1e-9),
            "large-population step {large}s vs small {small}s"
        );
    }

    #[test]
    fn runs_are_bit_reproducible() {
        let law = EnvironmentLaw::single(vec![0.875, 0.875]).unwrap();
        let config = BranchingConfig {
            log_path: true,
            overshoot_levels: vec![5, 20],
            ..Default::default()
        };
        let a = run_to_extinction(&law, 3, &config, 77);
        let b = run_to_extinction(&law, 3, &config, 77);
        assert_eq!(a, b);
    }
}
