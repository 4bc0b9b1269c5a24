//! The excited random walk itself: coin-toss simulation, first-passage
//! times, backtrack counts, speed estimation, and an exhaustive
//! small-horizon oracle used as ground truth in tests.

use crate::env::{Environment, EnvironmentLaw};
use crate::rng::{context_id, rng_from_seed};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WalkError {
    #[error("oracle horizon {got} exceeds the enumerable bound {max}")]
    OracleHorizonTooLarge { got: u32, max: u32 },
    #[error("oracle requires a deterministic single-atom law; this law has {atoms} atoms")]
    OracleNeedsSingleAtom { atoms: usize },
    #[error("monitored levels must exceed the start position {start}; got {level}")]
    BadMonitorLevel { start: i64, level: i64 },
    #[error("backtrack identity requires a record stopped at its target level")]
    NotAPassageRecord,
}

/// When to stop a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopRule {
    /// Stop at the first visit to `level`, or at `horizon` steps if given
    /// and reached first. Level beats horizon when the final allowed step
    /// lands on the level.
    FirstPassage { level: i64, horizon: Option<u64> },
    /// Run exactly `horizon` steps.
    Horizon(u64),
    /// Stop at the first return to the start, or at `horizon` steps.
    FirstReturn { horizon: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    ReachedLevel { level: i64, time: u64 },
    HorizonExhausted { horizon: u64 },
    ReturnedToOrigin { time: u64 },
}

/// Simulation switches beyond the stop rule. Summary-only runs (all flags
/// off) keep million-rep experiments inside the memory budget.
#[derive(Debug, Clone, Default)]
pub struct WalkConfig {
    pub stop: StopRule,
    /// Record per-site counts of jumps `k -> k-1`.
    pub track_backtracks: bool,
    /// Keep the full position sequence.
    pub log_trajectory: bool,
    /// Record first-passage times of these levels (ascending, > start).
    pub monitor_levels: Vec<i64>,
    /// Track `inf X` after the first passage of this level.
    pub min_after_level: Option<i64>,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule::Horizon(0)
    }
}

impl WalkConfig {
    pub fn passage_to(level: i64) -> Self {
        WalkConfig {
            stop: StopRule::FirstPassage {
                level,
                horizon: None,
            },
            ..Default::default()
        }
    }

    pub fn passage_capped(level: i64, horizon: u64) -> Self {
        WalkConfig {
            stop: StopRule::FirstPassage {
                level,
                horizon: Some(horizon),
            },
            ..Default::default()
        }
    }

    pub fn horizon(h: u64) -> Self {
        WalkConfig {
            stop: StopRule::Horizon(h),
            ..Default::default()
        }
    }
}

/// Per-site backtrack counts `D_k` = number of jumps from `k` to `k-1`
/// accumulated up to the stop time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Backtracks {
    /// Counts at sites 0, 1, 2, ...
    pub nonneg: Vec<u64>,
    /// Counts at sites -1, -2, ...
    pub neg: Vec<u64>,
}

impl Backtracks {
    pub fn at(&self, site: i64) -> u64 {
        if site >= 0 {
            self.nonneg.get(site as usize).copied().unwrap_or(0)
        } else {
            self.neg.get((-site - 1) as usize).copied().unwrap_or(0)
        }
    }

    pub fn total(&self) -> u64 {
        self.nonneg.iter().sum::<u64>() + self.neg.iter().sum::<u64>()
    }

    pub fn total_negative_side(&self) -> u64 {
        self.neg.iter().sum()
    }
}

/// Summary of one trajectory. Identical `(law, config, seed)` always
/// produce an identical record, byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkRecord {
    pub seed: u64,
    pub start: i64,
    pub stop_reason: StopReason,
    pub steps: u64,
    pub final_position: i64,
    pub max_position: i64,
    /// First-passage times of the monitored levels that were reached.
    pub passage_times: BTreeMap<i64, u64>,
    /// Total jumps `k -> k-1` up to the stop time.
    pub left_jumps: u64,
    /// Time indices with the walker strictly below zero.
    pub steps_below_zero: u64,
    /// Visits to the start site after time zero.
    pub returns_to_start: u64,
    /// `inf X` over `[T_level, stop]` when `min_after_level` was reached.
    pub min_after: Option<i64>,
    pub backtracks: Option<Backtracks>,
    pub trajectory: Option<Vec<i64>>,
}

impl WalkRecord {
    /// First-passage time of `level`, if it was monitored and reached.
    pub fn passage_time(&self, level: i64) -> Option<u64> {
        self.passage_times.get(&level).copied()
    }

    pub fn reached_level(&self) -> Option<(i64, u64)> {
        match self.stop_reason {
            StopReason::ReachedLevel { level, time } => Some((level, time)),
            _ => None,
        }
    }
}

/// Simulate one trajectory from the origin. The per-step rule is the
/// coin-toss construction: on the `i`-th visit to `z`, step right with
/// probability `omega_z(i)` (fair beyond the stack).
pub fn simulate_walk(law: &EnvironmentLaw, config: &WalkConfig, seed: u64) -> WalkRecord {
    let mut rng = rng_from_seed(seed);
    simulate_walk_rng(law, config, seed, &mut rng)
}

/// Same as [`simulate_walk`] but driven by a caller-owned generator;
/// `seed` is only stamped into the record.
pub fn simulate_walk_rng<R: Rng>(
    law: &EnvironmentLaw,
    config: &WalkConfig,
    seed: u64,
    rng: &mut R,
) -> WalkRecord {
    let start: i64 = 0;
    let mut env = Environment::new(law);
    let mut x = start;
    let mut steps: u64 = 0;
    let mut left_jumps: u64 = 0;
    let mut steps_below_zero: u64 = 0;
    let mut returns: u64 = 0;
    let mut max_position = start;
    let mut passage_times = BTreeMap::new();

    let mut monitor = config.monitor_levels.clone();
    monitor.sort_unstable();
    monitor.dedup();
    if let StopRule::FirstPassage { level, .. } = config.stop {
        if !monitor.contains(&level) {
            monitor.push(level);
            monitor.sort_unstable();
        }
    }
    if let Some(level) = config.min_after_level {
        if !monitor.contains(&level) {
            monitor.push(level);
            monitor.sort_unstable();
        }
    }
    debug_assert!(monitor.iter().all(|l| *l > start));
    let mut next_monitor = 0usize;

    let mut min_tracking: Option<i64> = None;
    let mut bt = config.track_backtracks.then(|| Backtracks {
        nonneg: Vec::new(),
        neg: Vec::new(),
    });
    let mut trajectory = config.log_trajectory.then(|| vec![start]);

    let (passage_level, horizon) = match config.stop {
        StopRule::FirstPassage { level, horizon } => (Some(level), horizon),
        StopRule::Horizon(h) => (None, Some(h)),
        StopRule::FirstReturn { horizon } => (None, Some(horizon)),
    };

    let stop_reason = 'run: loop {
        if let Some(h) = horizon {
            if steps >= h {
                break 'run StopReason::HorizonExhausted { horizon: h };
            }
        }
        let p = env.eat_cookie(x, rng);
        let right = rng.random::<f64>() < p;
        if !right {
            left_jumps += 1;
            if let Some(bt) = bt.as_mut() {
                if x >= 0 {
                    let idx = x as usize;
                    if bt.nonneg.len() <= idx {
                        bt.nonneg.resize(idx + 1, 0);
                    }
                    bt.nonneg[idx] += 1;
                } else {
                    let idx = (-x - 1) as usize;
                    if bt.neg.len() <= idx {
                        bt.neg.resize(idx + 1, 0);
                    }
                    bt.neg[idx] += 1;
                }
            }
        }
        x += if right { 1 } else { -1 };
        steps += 1;
        if let Some(t) = trajectory.as_mut() {
            t.push(x);
        }
        if x < 0 {
            steps_below_zero += 1;
        }
        if x == start {
            returns += 1;
            if matches!(config.stop, StopRule::FirstReturn { .. }) {
                break 'run StopReason::ReturnedToOrigin { time: steps };
            }
        }
        if x > max_position {
            max_position = x;
            while next_monitor < monitor.len() && monitor[next_monitor] == x {
                passage_times.insert(x, steps);
                if config.min_after_level == Some(x) {
                    min_tracking = Some(x);
                }
                next_monitor += 1;
            }
        }
        if let Some(m) = min_tracking.as_mut() {
            if x < *m {
                *m = x;
            }
        }
        if passage_level == Some(x) {
            break 'run StopReason::ReachedLevel {
                level: x,
                time: steps,
            };
        }
    };

    WalkRecord {
        seed,
        start,
        stop_reason,
        steps,
        final_position: x,
        max_position,
        passage_times,
        left_jumps,
        steps_below_zero,
        returns_to_start: returns,
        min_after: min_tracking,
        backtracks: bt,
        trajectory,
    }
}

/// Check the passage-time identity `T_n = n + 2 * (left jumps before T_n)`
/// on a record that stopped at its target level, recomputing the jump count
/// from whatever the record stored (per-site counts and, when present, the
/// raw trajectory).
pub fn backtrack_identity_check(record: &WalkRecord) -> Result<bool, WalkError> {
    let (level, time) = record.reached_level().ok_or(WalkError::NotAPassageRecord)?;
    let displacement = level - record.start;
    let mut ok = time as i64 == displacement + 2 * record.left_jumps as i64;
    if let Some(bt) = &record.backtracks {
        ok = ok && bt.total() == record.left_jumps;
    }
    if let Some(traj) = &record.trajectory {
        let recount = traj.windows(2).filter(|w| w[1] < w[0]).count() as u64;
        ok = ok && recount == record.left_jumps;
    }
    Ok(ok)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpeedEstimate {
    pub v_hat: f64,
    pub stderr: f64,
    pub reps: usize,
}

fn speed_ctx() -> u64 {
    static CTX: OnceLock<u64> = OnceLock::new();
    *CTX.get_or_init(|| context_id("walk.estimate_speed"))
}

/// Law-of-large-numbers speed estimate: mean and standard error of
/// `X_n / n` over independent trajectories.
pub fn estimate_speed(
    law: &EnvironmentLaw,
    n_steps: u64,
    reps: usize,
    master_seed: u64,
) -> SpeedEstimate {
    assert!(reps >= 2, "speed estimate needs at least two reps");
    let ctx = speed_ctx();
    let ratios: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let seed = crate::rng::stream_seed(master_seed, ctx, rep);
            let record = simulate_walk(law, &WalkConfig::horizon(n_steps), seed);
            record.final_position as f64 / n_steps as f64
        })
        .collect();
    let mean = ratios.iter().sum::<f64>() / reps as f64;
    let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
    SpeedEstimate {
        v_hat: mean,
        stderr: (var / reps as f64).sqrt(),
        reps,
    }
}

/// Exact finite-horizon distribution of a deterministic (single-atom) law,
/// computed by exhaustive recursion over the coin-toss tree. Ground truth
/// for Monte Carlo tests.
#[derive(Debug, Clone)]
pub struct FiniteHorizonDist {
    pub horizon: u32,
    /// `P(X_h = x)` over the support.
    pub final_position: BTreeMap<i64, f64>,
    /// `P(T_level = t)` for `1 <= level <= h`, `t <= h`.
    pub passage: BTreeMap<i64, BTreeMap<u64, f64>>,
}

impl FiniteHorizonDist {
    pub fn prob_final(&self, x: i64) -> f64 {
        self.final_position.get(&x).copied().unwrap_or(0.0)
    }

    pub fn prob_passage_at(&self, level: i64, t: u64) -> f64 {
        self.passage
            .get(&level)
            .and_then(|m| m.get(&t))
            .copied()
            .unwrap_or(0.0)
    }

    /// `P(T_level <= h)`.
    pub fn prob_passage(&self, level: i64) -> f64 {
        self.passage
            .get(&level)
            .map(|m| m.values().sum())
            .unwrap_or(0.0)
    }
}

pub const ORACLE_MAX_HORIZON: u32 = 14;

/// Enumerate every coin-toss outcome of a single-atom law up to `horizon`
/// steps (at most `2^horizon` leaves) and collect exact event
/// probabilities.
pub fn exact_finite_horizon_oracle(
    law: &EnvironmentLaw,
    horizon: u32,
) -> Result<FiniteHorizonDist, WalkError> {
    if horizon > ORACLE_MAX_HORIZON {
        return Err(WalkError::OracleHorizonTooLarge {
            got: horizon,
            max: ORACLE_MAX_HORIZON,
        });
    }
    if law.n_atoms() != 1 {
        return Err(WalkError::OracleNeedsSingleAtom {
            atoms: law.n_atoms(),
        });
    }
    let stack = law.stack(0);
    let h = horizon as usize;
    let span = 2 * h + 1;
    let mut visits = vec![0u32; span.max(1)];
    let mut dist = FiniteHorizonDist {
        horizon,
        final_position: BTreeMap::new(),
        passage: BTreeMap::new(),
    };

    // Depth-first over right/left branches; `prob` is the branch weight.
    fn recurse(
        stack: &crate::env::CookieStack,
        visits: &mut [u32],
        h: usize,
        x: i64,
        step: usize,
        max_seen: i64,
        prob: f64,
        dist: &mut FiniteHorizonDist,
    ) {
        if step == h {
            *dist.final_position.entry(x).or_insert(0.0) += prob;
            return;
        }
        let idx = (x + h as i64) as usize;
        let p_right = stack.prob(visits[idx] as usize + 1);
        visits[idx] += 1;
        for (move_right, p) in [(true, p_right), (false, 1.0 - p_right)] {
            if p == 0.0 {
                continue;
            }
            let nx = if move_right { x + 1 } else { x - 1 };
            let mut new_max = max_seen;
            if nx > max_seen {
                new_max = nx;
                if nx >= 1 {
                    *dist
                        .passage
                        .entry(nx)
                        .or_default()
                        .entry(step as u64 + 1)
                        .or_insert(0.0) += prob * p;
                }
            }
            recurse(stack, visits, h, nx, step + 1, new_max, prob * p, dist);
        }
        visits[idx] -= 1;
    }

    recurse(stack, &mut visits, h, 0, 0, 0, 1.0, &mut dist);
    Ok(dist)
}

/// Post-passage minimum samples: for each rep that reached level `n` within
/// the horizon, the infimum of the walk from `T_n` to the horizon.
#[derive(Debug, Clone)]
pub struct MinAfterSamples {
    pub n: i64,
    pub mins: Vec<i64>,
    pub unreached: usize,
}

impl MinAfterSamples {
    /// Empirical `P(inf_{i >= T_n} X_i < n - k)` with its standard error.
    pub fn tail_prob(&self, k: i64) -> (f64, f64) {
        let total = self.mins.len();
        if total == 0 {
            return (f64::NAN, f64::NAN);
        }
        let hits = self.mins.iter().filter(|m| **m < self.n - k).count();
        let p = hits as f64 / total as f64;
        (p, (p * (1.0 - p) / total as f64).sqrt())
    }
}

fn min_after_ctx() -> u64 {
    static CTX: OnceLock<u64> = OnceLock::new();
    *CTX.get_or_init(|| context_id("walk.min_after_passage"))
}

/// Run `reps` trajectories to `horizon` steps and collect the post-passage
/// minima for level `n`. Reps that never reach `n` are excluded and
/// counted. Evaluating several `k` thresholds on one sample set yields the
/// common-random-numbers coupling.
pub fn min_after_passage_samples(
    law: &EnvironmentLaw,
    n: i64,
    horizon: u64,
    reps: usize,
    master_seed: u64,
) -> MinAfterSamples {
    let ctx = min_after_ctx();
    let config = WalkConfig {
        stop: StopRule::Horizon(horizon),
        min_after_level: Some(n),
        ..Default::default()
    };
    let mins: Vec<Option<i64>> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let seed = crate::rng::stream_seed(master_seed, ctx, rep);
            simulate_walk(law, &config, seed).min_after
        })
        .collect();
    let unreached = mins.iter().filter(|m| m.is_none()).count();
    MinAfterSamples {
        n,
        mins: mins.into_iter().flatten().collect(),
        unreached,
    }
}

/// Empirical probability of `{inf_{i >= T_n} X_i < n - k}`; returns
/// `(frequency, stderr, unreached_count)`.
pub fn min_after_tn_tail(
    law: &EnvironmentLaw,
    n: i64,
    k: i64,
    horizon: u64,
    reps: usize,
    master_seed: u64,
) -> (f64, f64, usize) {
    let samples = min_after_passage_samples(law, n, horizon, reps, master_seed);
    let (p, se) = samples.tail_prob(k);
    (p, se, samples.unreached)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn right_march(m: usize) -> EnvironmentLaw {
        EnvironmentLaw::single(vec![1.0; m]).unwrap()
    }

    #[test]
    fn deterministic_right_march() {
        let law = right_march(3);
        let record = simulate_walk(&law, &WalkConfig::passage_to(50), 1);
        assert_eq!(record.reached_level(), Some((50, 50)));
        assert_eq!(record.left_jumps, 0);
        assert_eq!(record.final_position, 50);
        assert!(backtrack_identity_check(&record).unwrap());
    }

    #[test]
    fn all_zero_law_forces_first_step_left() {
        let law = EnvironmentLaw::single(vec![0.0, 0.0]).unwrap();
        for seed in 0..20 {
            let record = simulate_walk(&law, &WalkConfig::horizon(1), seed);
            assert_eq!(record.final_position, -1);
        }
    }

    #[test]
    fn first_step_frequency_matches_cookie() {
        // M=1, p=0.7: P(X_1 = 1) = 0.7.
        let law = EnvironmentLaw::single(vec![0.7]).unwrap();
        let reps = 200_000;
        let hits = (0..reps)
            .filter(|seed| {
                simulate_walk(&law, &WalkConfig::horizon(1), *seed).final_position == 1
            })
            .count();
        let p_hat = hits as f64 / reps as f64;
        let se = (0.7f64 * 0.3 / reps as f64).sqrt();
        assert!(
            (p_hat - 0.7).abs() < 4.0 * se,
            "p_hat = {p_hat}, se = {se}"
        );
    }

    #[test]
    fn backtrack_identity_on_logged_runs() {
        let law = EnvironmentLaw::single(vec![0.875, 0.875]).unwrap();
        let config = WalkConfig {
            stop: StopRule::FirstPassage {
                level: 30,
                horizon: Some(2_000_000),
            },
            track_backtracks: true,
            log_trajectory: true,
            ..Default::default()
        };
        let mut checked = 0;
        for seed in 0..200 {
            let record = simulate_walk(&law, &config, seed);
            if record.reached_level().is_some() {
                assert!(backtrack_identity_check(&record).unwrap(), "seed {seed}");
                let (_, t) = record.reached_level().unwrap();
                assert_eq!((t as i64 - 30) % 2, 0);
                checked += 1;
            }
        }
        assert!(checked > 150);
    }

    #[test]
    fn hand_enumerated_path_identity() {
        // Path 0,1,0,1,2: T_2 = 4 with one left jump; 2 + 2*1 = 4.
        let record = WalkRecord {
            seed: 0,
            start: 0,
            stop_reason: StopReason::ReachedLevel { level: 2, time: 4 },
            steps: 4,
            final_position: 2,
            max_position: 2,
            passage_times: BTreeMap::from([(1, 1), (2, 4)]),
            left_jumps: 1,
            steps_below_zero: 0,
            returns_to_start: 1,
            min_after: None,
            backtracks: None,
            trajectory: Some(vec![0, 1, 0, 1, 2]),
        };
        assert!(backtrack_identity_check(&record).unwrap());
    }

    #[test]
    fn oracle_rejects_bad_inputs() {
        let law = right_march(1);
        assert!(matches!(
            exact_finite_horizon_oracle(&law, 20),
            Err(WalkError::OracleHorizonTooLarge { .. })
        ));
        let two = EnvironmentLaw::new(1, vec![(vec![0.2], 0.5), (vec![0.8], 0.5)]).unwrap();
        assert!(matches!(
            exact_finite_horizon_oracle(&two, 3),
            Err(WalkError::OracleNeedsSingleAtom { .. })
        ));
    }

    #[test]
    fn oracle_small_cases() {
        // M=1, p: P(T_1 = 1) = p and P(T_1 = 3) = (1-p) * p * 1/2.
        let p = 0.7;
        let law = EnvironmentLaw::single(vec![p]).unwrap();
        let dist = exact_finite_horizon_oracle(&law, 5).unwrap();
        assert_abs_diff_eq!(dist.prob_passage_at(1, 1), p, epsilon = 1e-12);
        assert_abs_diff_eq!(
            dist.prob_passage_at(1, 3),
            (1.0 - p) * p * 0.5,
            epsilon = 1e-12
        );
        // Probabilities at the horizon partition the space.
        let total: f64 = dist.final_position.values().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);

        // M=2 homogeneous: P(X_2 = 2) = p1^2.
        let law2 = EnvironmentLaw::single(vec![0.6, 0.9]).unwrap();
        let dist2 = exact_finite_horizon_oracle(&law2, 2).unwrap();
        assert_abs_diff_eq!(dist2.prob_final(2), 0.36, epsilon = 1e-12);
    }

    #[test]
    fn oracle_matches_monte_carlo() {
        let law = EnvironmentLaw::single(vec![0.3, 0.8]).unwrap();
        let h = 6;
        let dist = exact_finite_horizon_oracle(&law, h).unwrap();
        let reps = 400_000u64;
        let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
        for seed in 0..reps {
            let record = simulate_walk(&law, &WalkConfig::horizon(h as u64), seed);
            *counts.entry(record.final_position).or_insert(0) += 1;
        }
        for (x, p) in &dist.final_position {
            let freq = *counts.get(x).unwrap_or(&0) as f64 / reps as f64;
            let se = (p * (1.0 - p) / reps as f64).sqrt().max(1e-6);
            assert!(
                (freq - p).abs() < 5.0 * se,
                "x = {x}: freq {freq} vs exact {p}"
            );
        }
    }

    #[test]
    fn speed_of_right_march_is_one() {
        let est = estimate_speed(&right_march(1), 1000, 8, 99);
        assert_abs_diff_eq!(est.v_hat, 1.0);
        assert_abs_diff_eq!(est.stderr, 0.0);
    }

    #[test]
    fn placebo_speed_is_zero() {
        let est = estimate_speed(&EnvironmentLaw::placebo(1), 20_000, 400, 7);
        assert!(
            est.v_hat.abs() < 4.0 * est.stderr.max(1e-12),
            "v_hat = {} stderr = {}",
            est.v_hat,
            est.stderr
        );
    }

    #[test]
    fn min_after_right_march_never_dips() {
        let samples = min_after_passage_samples(&right_march(1), 40, 200, 64, 5);
        assert_eq!(samples.unreached, 0);
        for k in 1..5 {
            let (p, _) = samples.tail_prob(k);
            assert_eq!(p, 0.0);
        }
    }

    #[test]
    fn min_after_tail_is_monotone_in_k_under_coupling() {
        let law = EnvironmentLaw::single(vec![0.9, 0.9, 0.9]).unwrap();
        let samples = min_after_passage_samples(&law, 30, 40_000, 2000, 11);
        let probs: Vec<f64> = (0..6).map(|k| samples.tail_prob(5 * k).0).collect();
        for w in probs.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{probs:?}");
        }
    }

    #[test]
    fn records_are_bit_reproducible() {
        let law = EnvironmentLaw::new(
            2,
            vec![(vec![0.9, 0.2], 0.25), (vec![0.4, 0.7], 0.75)],
        )
        .unwrap();
        let config = WalkConfig {
            stop: StopRule::FirstPassage {
                level: 15,
                horizon: Some(100_000),
            },
            track_backtracks: true,
            log_trajectory: true,
            monitor_levels: vec![5, 10],
            min_after_level: None,
        };
        let a = simulate_walk(&law, &config, 1234);
        let b = simulate_walk(&law, &config, 1234);
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_vec(&a).unwrap(),
            serde_json::to_vec(&b).unwrap()
        );
        let c = simulate_walk(&law, &config, 1235);
        assert_ne!(a, c);
    }

    #[test]
    fn time_below_zero_is_sublinear_for_transient_law() {
        // delta = 1.5 law; fraction of time below 0 before T_n stays small.
        let law = EnvironmentLaw::single(vec![0.875, 0.875]).unwrap();
        let mut ratios = Vec::new();
        for seed in 0..300u64 {
            let record = simulate_walk(&law, &WalkConfig::passage_capped(1000, 30_000_000), seed);
            if let Some((_, t)) = record.reached_level() {
                ratios.push(record.steps_below_zero as f64 / t as f64);
            }
        }
        assert!(ratios.len() > 250);
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!(mean < 0.05, "mean fraction below zero = {mean}");
    }

    #[test]
    fn first_return_stop_rule() {
        let law = EnvironmentLaw::placebo(1);
        let config = WalkConfig {
            stop: StopRule::FirstReturn { horizon: 1_000_000 },
            ..Default::default()
        };
        let record = simulate_walk(&law, &config, 3);
        match record.stop_reason {
            StopReason::ReturnedToOrigin { time } => {
                assert!(time >= 2 && time % 2 == 0);
                assert_eq!(record.final_position, 0);
            }
            other => panic!("expected a return, got {other:?}"),
        }
    }
}
