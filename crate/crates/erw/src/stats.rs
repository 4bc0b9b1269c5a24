//! Estimators and statistical checks: tail-index fits, two-sample and
//! one-sample Kolmogorov-Smirnov tests, chi-square goodness of fit, the
//! stable-law characteristic function, passage-time normalization, and the
//! regime-level Monte Carlo diagnostics that tie the walk, the branching
//! process, and the diffusion together.

use crate::branching::run_until_below;
use crate::diffusion::{simulate_y, DiffusionConfig};
use crate::env::EnvironmentLaw;
use crate::rng::{context_id, stream_seed};
use crate::walk::{simulate_walk, WalkConfig};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {need} samples; got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error("no positive exceedances: the sample has no tail to fit")]
    NoExceedances,
    #[error("no usable threshold range (all grid points were dropped)")]
    NoUsableRange,
    #[error("passage-time normalization applies to delta in (2, 4]; got {delta}")]
    RegimeMismatch { delta: f64 },
    #[error("speed must be positive; got {v}")]
    BadSpeed { v: f64 },
    #[error("samples must be nonempty")]
    EmptySample,
    #[error("stable parameters out of range: alpha={alpha}, b={b}")]
    BadStableParams { alpha: f64, b: f64 },
    #[error("observed and expected lengths differ: {observed} vs {expected}")]
    MismatchedLengths { observed: usize, expected: usize },
}

// ---------------------------------------------------------------------------
// Stable laws
// ---------------------------------------------------------------------------

/// Parameters of the totally skewed stable law `Z_{alpha,b}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    pub alpha: f64,
    pub b: f64,
}

impl StableParams {
    pub fn new(alpha: f64, b: f64) -> Result<Self, StatsError> {
        if !(alpha > 0.0 && alpha <= 2.0) || !(b > 0.0) {
            return Err(StatsError::BadStableParams { alpha, b });
        }
        Ok(StableParams { alpha, b })
    }
}

/// Log characteristic function of `Z_{alpha,b}`:
/// `-b|u|^alpha (1 - i sgn(u) tan(pi alpha / 2))` for `alpha != 1`,
/// `-b|u| (1 + (2i/pi) sgn(u) ln|u|)` for `alpha = 1`, and `0` at `u = 0`.
/// `Z_{2,b}` is centered normal with variance `2b`.
pub fn stable_log_cf(params: &StableParams, u: f64) -> Complex64 {
    if u == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let sign = u.signum();
    let abs = u.abs();
    if params.alpha == 1.0 {
        let re = -params.b * abs;
        Complex64::new(re, re * sign * 2.0 / std::f64::consts::PI * abs.ln())
    } else {
        let mag = params.b * abs.powf(params.alpha);
        let skew = sign * (std::f64::consts::FRAC_PI_2 * params.alpha).tan();
        Complex64::new(-mag, mag * skew)
    }
}

// ---------------------------------------------------------------------------
// Tail-index estimation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMethod {
    Hill,
    LoglogSurvival,
}

#[derive(Debug, Clone)]
pub struct TailFitConfig {
    /// Threshold range for the survival fit; data-driven when absent
    /// (median up to the ~30-exceedance quantile).
    pub range: Option<(f64, f64)>,
    pub grid_points: usize,
    pub min_exceedances: usize,
    /// Order statistics used by Hill; `ceil(sqrt(n))` when absent.
    pub hill_k: Option<usize>,
}

impl Default for TailFitConfig {
    fn default() -> Self {
        TailFitConfig {
            range: None,
            grid_points: 16,
            min_exceedances: 30,
            hill_k: None,
        }
    }
}

/// A fitted tail exponent: `P(X > t) ~ t^(-exponent)` over `range`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailFit {
    pub exponent: f64,
    pub stderr: f64,
    pub method: TailMethod,
    pub range: (f64, f64),
    pub n_exceed: usize,
    /// Quadratic coefficient of the log-log survival curve; far from zero
    /// means the data are not power-law over the fitted range.
    pub curvature: f64,
    pub power_law_plausible: bool,
    /// `n_exceed >= 30`.
    pub reliable: bool,
    pub warnings: Vec<String>,
}

const MIN_TAIL_SAMPLES: usize = 1000;
const CURVATURE_LIMIT: f64 = 0.25;

/// Fit a positive tail exponent by the requested method.
pub fn fit_tail_exponent(
    samples: &[f64],
    method: TailMethod,
    config: &TailFitConfig,
) -> Result<TailFit, StatsError> {
    if samples.len() < MIN_TAIL_SAMPLES {
        return Err(StatsError::TooFewSamples {
            got: samples.len(),
            need: MIN_TAIL_SAMPLES,
        });
    }
    match method {
        TailMethod::Hill => hill_fit(samples, config),
        TailMethod::LoglogSurvival => survival_fit(samples, config),
    }
}

fn hill_fit(samples: &[f64], config: &TailFitConfig) -> Result<TailFit, StatsError> {
    let mut positive: Vec<f64> = samples.iter().copied().filter(|x| *x > 0.0).collect();
    if positive.is_empty() {
        return Err(StatsError::NoExceedances);
    }
    positive.sort_unstable_by(|a, b| b.total_cmp(a));
    let n = positive.len();
    let k = config
        .hill_k
        .unwrap_or_else(|| (n as f64).sqrt().ceil() as usize)
        .clamp(1, n - 1);
    let x_k = positive[k];
    if x_k <= 0.0 {
        return Err(StatsError::NoExceedances);
    }
    let sum_log: f64 = positive[..k].iter().map(|x| (x / x_k).ln()).sum();
    if sum_log <= 0.0 {
        // All top order statistics tie with the threshold.
        return Err(StatsError::NoUsableRange);
    }
    let exponent = k as f64 / sum_log;
    let mut warnings = Vec::new();
    let reliable = k >= 30;
    if !reliable {
        warnings.push(format!("only {k} order statistics; fit unreliable"));
    }
    Ok(TailFit {
        exponent,
        stderr: exponent / (k as f64).sqrt(),
        method: TailMethod::Hill,
        range: (x_k, positive[0]),
        n_exceed: k,
        curvature: 0.0,
        power_law_plausible: true,
        reliable,
        warnings,
    })
}

fn survival_fit(samples: &[f64], config: &TailFitConfig) -> Result<TailFit, StatsError> {
    let mut sorted: Vec<f64> = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    let quantile = |q: f64| -> f64 {
        let idx = ((n as f64 - 1.0) * q).round() as usize;
        sorted[idx.min(n - 1)]
    };
    let (lo, hi) = match config.range {
        Some(r) => r,
        None => {
            let top = (config.min_exceedances as f64 / n as f64).max(1e-3);
            (quantile(0.5), quantile(1.0 - top))
        }
    };
    if !(lo > 0.0) || !(hi > lo) {
        return Err(StatsError::NoUsableRange);
    }

    let exceed_above = |t: f64| -> usize {
        // Count of samples strictly greater than t.
        n - sorted.partition_point(|x| *x <= t)
    };

    let points: Vec<(f64, f64)> = (0..config.grid_points)
        .map(|j| {
            let frac = j as f64 / (config.grid_points.saturating_sub(1)).max(1) as f64;
            lo * (hi / lo).powf(frac)
        })
        .map(|t| (t, exceed_above(t)))
        .filter(|(_, c)| *c >= config.min_exceedances)
        .map(|(t, c)| (t.ln(), (c as f64 / n as f64).ln()))
        .collect();

    let mut warnings = Vec::new();
    if points.len() < config.grid_points {
        warnings.push(format!(
            "{} of {} thresholds dropped (fewer than {} exceedances)",
            config.grid_points - points.len(),
            config.grid_points,
            config.min_exceedances
        ));
    }
    if points.len() < 3 {
        return if exceed_above(lo) == 0 {
            Err(StatsError::NoExceedances)
        } else {
            Err(StatsError::NoUsableRange)
        };
    }

    let (slope, slope_se) = ols_slope(&points);
    let curvature = quadratic_coefficient(&points);
    let n_exceed = exceed_above(points.last().map(|(x, _)| x.exp()).unwrap_or(hi));
    let fitted_hi = points.last().unwrap().0.exp();
    let power_law_plausible = curvature.abs() <= CURVATURE_LIMIT;
    if !power_law_plausible {
        warnings.push(format!(
            "log-log survival curvature {curvature:.3} exceeds {CURVATURE_LIMIT}; not a power law over this range"
        ));
    }
    Ok(TailFit {
        exponent: -slope,
        stderr: slope_se,
        method: TailMethod::LoglogSurvival,
        range: (points[0].0.exp(), fitted_hi),
        n_exceed,
        curvature,
        power_law_plausible,
        reliable: n_exceed >= 30,
        warnings,
    })
}

/// OLS slope and its standard error for `(x, y)` pairs.
fn ols_slope(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = points.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|(x, _)| (x - mean_x).powi(2)).sum();
    let sxy: f64 = points
        .iter()
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ssr: f64 = points
        .iter()
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let se = if points.len() > 2 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, se)
}

/// Coefficient of `x^2` in the least-squares quadratic through the points.
fn quadratic_coefficient(points: &[(f64, f64)]) -> f64 {
    // Center x for conditioning, then solve the 3x3 normal equations.
    let n = points.len() as f64;
    let mean_x = points.iter().map(|(x, _)| x).sum::<f64>() / n;
    let xs: Vec<f64> = points.iter().map(|(x, _)| x - mean_x).collect();
    let ys: Vec<f64> = points.iter().map(|(_, y)| *y).collect();
    let s = |k: u32| -> f64 { xs.iter().map(|x| x.powi(k as i32)).sum() };
    let (s0, s1, s2, s3, s4) = (n, s(1), s(2), s(3), s(4));
    let t0: f64 = ys.iter().sum();
    let t1: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let t2: f64 = xs.iter().zip(&ys).map(|(x, y)| x * x * y).sum();
    // Solve [s0 s1 s2; s1 s2 s3; s2 s3 s4] [c0 c1 c2]' = [t0 t1 t2]'.
    let det = s0 * (s2 * s4 - s3 * s3) - s1 * (s1 * s4 - s3 * s2) + s2 * (s1 * s3 - s2 * s2);
    if det.abs() < 1e-12 {
        return 0.0;
    }
    // Cramer's rule, third column replaced by the right-hand side.
    let det_c2 = s0 * (s2 * t2 - t1 * s3) - s1 * (s1 * t2 - t1 * s2) + t0 * (s1 * s3 - s2 * s2);
    det_c2 / det
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize)]
pub struct KsResult {
    pub distance: f64,
    pub p_value: f64,
    pub n_a: usize,
    pub n_b: usize,
}

/// Classical two-sample KS statistic with the asymptotic p-value. Ties are
/// handled by advancing both empirical CDFs past each shared value, which
/// keeps the statistic exact for integer-valued data (the p-value is then
/// conservative).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut xs: Vec<f64> = a.to_vec();
    let mut ys: Vec<f64> = b.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    ys.sort_unstable_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut distance = 0f64;
    while i < n || j < m {
        let t = match (xs.get(i), ys.get(j)) {
            (Some(x), Some(y)) => x.min(*y),
            (Some(x), None) => *x,
            (None, Some(y)) => *y,
            (None, None) => break,
        };
        while i < n && xs[i] == t {
            i += 1;
        }
        while j < m && ys[j] == t {
            j += 1;
        }
        let diff = (i as f64 / n as f64 - j as f64 / m as f64).abs();
        if diff > distance {
            distance = diff;
        }
    }
    let ne = (n as f64) * (m as f64) / (n as f64 + m as f64);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * distance;
    Ok(KsResult {
        distance,
        p_value: ks_survival(lambda),
        n_a: n,
        n_b: m,
    })
}

/// One-sample KS distance against the standard normal.
pub fn ks_distance_to_std_normal(samples: &[f64]) -> Result<f64, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut xs = samples.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0f64;
    for (idx, x) in xs.iter().enumerate() {
        let cdf = normal.cdf(*x);
        let hi = (idx as f64 + 1.0) / n - cdf;
        let lo = cdf - idx as f64 / n;
        d = d.max(hi.max(lo));
    }
    Ok(d)
}

/// Kolmogorov survival function `Q(lambda) = 2 sum (-1)^{j-1} e^{-2 j^2 lambda^2}`.
fn ks_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0f64;
    let mut sign = 1f64;
    for j in 1..=100 {
        let term = (-2.0 * (j as f64).powi(2) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

// ---------------------------------------------------------------------------
// Chi-square goodness of fit
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square of observed category counts against expected
/// probabilities (a full partition). Adjacent categories are pooled left to
/// right until each pooled bin expects at least `min_expected` counts.
pub fn chi_square_gof(
    observed: &[u64],
    expected_probs: &[f64],
    min_expected: f64,
) -> Result<ChiSquareResult, StatsError> {
    if observed.len() != expected_probs.len() {
        return Err(StatsError::MismatchedLengths {
            observed: observed.len(),
            expected: expected_probs.len(),
        });
    }
    if observed.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let n: u64 = observed.iter().sum();
    let total = n as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut acc_obs = 0f64;
    let mut acc_exp = 0f64;
    for (o, p) in observed.iter().zip(expected_probs) {
        acc_obs += *o as f64;
        acc_exp += p * total;
        if acc_exp >= min_expected {
            bins.push((acc_obs, acc_exp));
            acc_obs = 0.0;
            acc_exp = 0.0;
        }
    }
    if acc_exp > 0.0 || acc_obs > 0.0 {
        if let Some(last) = bins.last_mut() {
            last.0 += acc_obs;
            last.1 += acc_exp;
        } else {
            bins.push((acc_obs, acc_exp));
        }
    }
    if bins.len() < 2 {
        return Ok(ChiSquareResult {
            statistic: 0.0,
            dof: 0,
            p_value: 1.0,
        });
    }
    let statistic: f64 = bins
        .iter()
        .map(|(o, e)| (o - e).powi(2) / e.max(1e-300))
        .sum();
    let dof = bins.len() - 1;
    let chi = ChiSquared::new(dof as f64).expect("positive dof");
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value: 1.0 - chi.cdf(statistic),
    })
}

// ---------------------------------------------------------------------------
// Passage-time normalization
// ---------------------------------------------------------------------------

const DELTA_FOUR_EPS: f64 = 1e-9;

/// Center and scale first-passage times for the stable regime:
/// `(T - n/v) / n^(2/delta)` for `delta` in (2, 4), and
/// `(T - n/v) / sqrt(n ln n)` at `delta = 4`.
pub fn normalize_passage_times(
    samples: &[f64],
    n: u64,
    v: f64,
    delta: f64,
) -> Result<Vec<f64>, StatsError> {
    if !(v > 0.0) {
        return Err(StatsError::BadSpeed { v });
    }
    let at_four = (delta - 4.0).abs() <= DELTA_FOUR_EPS;
    if delta <= 2.0 || (delta > 4.0 && !at_four) {
        return Err(StatsError::RegimeMismatch { delta });
    }
    let nf = n as f64;
    let scale = if at_four {
        (nf * nf.ln()).sqrt()
    } else {
        nf.powf(2.0 / delta)
    };
    let center = nf / v;
    Ok(samples.iter().map(|t| (t - center) / scale).collect())
}

// ---------------------------------------------------------------------------
// Sub-ballistic growth exponent
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct GrowthExponentReport {
    pub levels: Vec<u64>,
    pub median_final: Vec<f64>,
    pub median_sup: Vec<f64>,
    /// Log-log slope of the median final position over the horizons.
    pub slope_final: f64,
    /// Same for the running maximum.
    pub slope_sup: f64,
    /// Bootstrap central interval for `slope_final - slope_sup`.
    pub slope_diff_ci: (f64, f64),
}

fn growth_ctx() -> u64 {
    static CTX: OnceLock<u64> = OnceLock::new();
    *CTX.get_or_init(|| context_id("stats.growth_exponent"))
}

fn median_of(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Median growth exponent of a zero-speed transient walk: simulate `reps`
/// trajectories per horizon and regress `ln median(X_n)` on `ln n`. The
/// expected slope is `delta / 2`.
pub fn growth_exponent_subballistic(
    law: &EnvironmentLaw,
    levels: &[u64],
    reps: usize,
    master_seed: u64,
) -> GrowthExponentReport {
    let ctx = growth_ctx();
    let mut final_by_level: Vec<Vec<f64>> = Vec::new();
    let mut sup_by_level: Vec<Vec<f64>> = Vec::new();
    for (li, n) in levels.iter().enumerate() {
        let rows: Vec<(f64, f64)> = (0..reps as u64)
            .into_par_iter()
            .map(|rep| {
                let seed = stream_seed(master_seed, ctx ^ li as u64, rep);
                let record = simulate_walk(law, &WalkConfig::horizon(*n), seed);
                (record.final_position as f64, record.max_position as f64)
            })
            .collect();
        final_by_level.push(rows.iter().map(|r| r.0).collect());
        sup_by_level.push(rows.iter().map(|r| r.1).collect());
    }

    let log_levels: Vec<f64> = levels.iter().map(|n| (*n as f64).ln()).collect();
    let medians = |data: &[Vec<f64>]| -> Vec<f64> {
        data.iter()
            .map(|xs| {
                let mut s = xs.clone();
                s.sort_unstable_by(f64::total_cmp);
                median_of(&s)
            })
            .collect()
    };
    let slope_of = |medians: &[f64]| -> f64 {
        let pts: Vec<(f64, f64)> = log_levels
            .iter()
            .zip(medians)
            .map(|(x, m)| (*x, m.max(1.0).ln()))
            .collect();
        ols_slope(&pts).0
    };
    let median_final = medians(&final_by_level);
    let median_sup = medians(&sup_by_level);
    let slope_final = slope_of(&median_final);
    let slope_sup = slope_of(&median_sup);

    // Bootstrap the two slopes from independent resamples: the interval
    // for their difference is then the joint CI of the two estimates
    // (a paired resample would cancel the shared noise and flag the tiny
    // systematic finite-n gap between sup and endpoint instead).
    let boots = 200;
    let mut rng = crate::rng::rep_rng(master_seed, ctx, u64::MAX);
    let mut diffs = Vec::with_capacity(boots);
    for _ in 0..boots {
        let mut bf = Vec::with_capacity(levels.len());
        let mut bs = Vec::with_capacity(levels.len());
        for li in 0..levels.len() {
            let fin = &final_by_level[li];
            let sup = &sup_by_level[li];
            let mut rf = Vec::with_capacity(fin.len());
            let mut rs = Vec::with_capacity(fin.len());
            for _ in 0..fin.len() {
                rf.push(fin[rng.random_range(0..fin.len())]);
                rs.push(sup[rng.random_range(0..sup.len())]);
            }
            rf.sort_unstable_by(f64::total_cmp);
            rs.sort_unstable_by(f64::total_cmp);
            bf.push(median_of(&rf));
            bs.push(median_of(&rs));
        }
        diffs.push(slope_of(&bf) - slope_of(&bs));
    }
    diffs.sort_unstable_by(f64::total_cmp);
    let lo = diffs[(boots as f64 * 0.005) as usize];
    let hi = diffs[((boots as f64 * 0.995) as usize).min(boots - 1)];

    GrowthExponentReport {
        levels: levels.to_vec(),
        median_final,
        median_sup,
        slope_final,
        slope_sup,
        slope_diff_ci: (lo, hi),
    }
}

// ---------------------------------------------------------------------------
// Diffusion approximation check
// ---------------------------------------------------------------------------

/// Functional compared between the scaled branching process and the
/// diffusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeakconFunctional {
    /// Time to first drop below the epsilon level, scaled by `n` on the
    /// branching side.
    HittingTime,
    /// Value of the (stopped) process at a fixed rescaled time.
    ValueAtTime(f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct WeakconReport {
    pub distance: f64,
    pub p_value: f64,
    pub branching_reps: usize,
    pub diffusion_reps: usize,
    pub branching_censored: usize,
    pub diffusion_censored: usize,
}

fn weakcon_ctx() -> (u64, u64) {
    static CTX: OnceLock<(u64, u64)> = OnceLock::new();
    *CTX.get_or_init(|| {
        (
            context_id("stats.weakcon.branching"),
            context_id("stats.weakcon.diffusion"),
        )
    })
}

/// Compare the law of a stopped branching functional, started from
/// `floor(n y)` and viewed on the `1/n` scale, with the matching
/// functional of the diffusion started at `y` and stopped at level
/// `epsilon`.
pub fn weakcon_check(
    law: &EnvironmentLaw,
    epsilon: f64,
    y: f64,
    n_scale: u64,
    functional: WeakconFunctional,
    reps: usize,
    master_seed: u64,
) -> Result<WeakconReport, StatsError> {
    assert!(y > epsilon && epsilon > 0.0);
    let (bctx, dctx) = weakcon_ctx();
    let n = n_scale as f64;
    let v0 = (n * y).floor() as u64;
    let threshold = (n * epsilon).floor() as u64;
    let cap = n_scale.saturating_mul(10_000);

    let branching: Vec<Option<f64>> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = crate::rng::rep_rng(master_seed, bctx, rep);
            match functional {
                WeakconFunctional::HittingTime => {
                    let stop = run_until_below(law, v0, threshold, cap, &mut rng);
                    stop.hit_below.then(|| stop.generation as f64 / n)
                }
                WeakconFunctional::ValueAtTime(t) => {
                    let gens = (t * n).round() as u64;
                    if gens == 0 {
                        return Some(v0 as f64 / n);
                    }
                    let stop = run_until_below(law, v0, threshold, gens, &mut rng);
                    Some(stop.value as f64 / n)
                }
            }
        })
        .collect();

    let t_max = match functional {
        WeakconFunctional::HittingTime => 1000.0 * y,
        WeakconFunctional::ValueAtTime(t) => t,
    };
    let config = DiffusionConfig {
        delta: law.delta(),
        y0: y,
        dt: 1e-4 * y.max(1.0),
        t_max,
        levels: vec![epsilon],
        stop_on_levels: true,
        log_path: false,
    };
    let diffusion: Vec<Option<f64>> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let result = simulate_y(&config, stream_seed(master_seed, dctx, rep));
            match functional {
                WeakconFunctional::HittingTime => result.level_hit(epsilon),
                WeakconFunctional::ValueAtTime(_) => Some(result.final_value.max(0.0)),
            }
        })
        .collect();

    let b_censored = branching.iter().filter(|x| x.is_none()).count();
    let d_censored = diffusion.iter().filter(|x| x.is_none()).count();
    let b: Vec<f64> = branching.into_iter().flatten().collect();
    let d: Vec<f64> = diffusion.into_iter().flatten().collect();
    let ks = ks_two_sample(&b, &d)?;
    Ok(WeakconReport {
        distance: ks.distance,
        p_value: ks.p_value,
        branching_reps: b.len(),
        diffusion_reps: d.len(),
        branching_censored: b_censored,
        diffusion_censored: d_censored,
    })
}

// ---------------------------------------------------------------------------
// Gaussian regime check
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct GaussianCheck {
    pub ks_distance: f64,
    pub v_hat: f64,
    pub sd: f64,
    pub reps: usize,
}

fn gaussian_ctx() -> u64 {
    static CTX: OnceLock<u64> = OnceLock::new();
    *CTX.get_or_init(|| context_id("stats.gaussian_regime"))
}

/// For `delta > 4` the studentized endpoint `(X_n - v n) / (s sqrt(n))`
/// is asymptotically standard normal. Returns the KS distance of the
/// studentized sample to N(0, 1), estimating both the speed and the
/// diffusivity from the sample itself.
pub fn gaussian_regime_check(
    law: &EnvironmentLaw,
    n: u64,
    reps: usize,
    master_seed: u64,
) -> Result<GaussianCheck, StatsError> {
    if reps < 2 {
        return Err(StatsError::TooFewSamples { got: reps, need: 2 });
    }
    let ctx = gaussian_ctx();
    let finals: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let record = simulate_walk(
                law,
                &WalkConfig::horizon(n),
                stream_seed(master_seed, ctx, rep),
            );
            record.final_position as f64
        })
        .collect();
    let mean = finals.iter().sum::<f64>() / reps as f64;
    let var = finals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
    let sd = var.sqrt();
    let standardized: Vec<f64> = finals.iter().map(|x| (x - mean) / sd).collect();
    Ok(GaussianCheck {
        ks_distance: ks_distance_to_std_normal(&standardized)?,
        v_hat: mean / n as f64,
        sd,
        reps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branching::sample_geometric_half;
    use crate::rng::rng_from_seed;
    use approx::assert_abs_diff_eq;

    #[test]
    fn stable_cf_trivial_points() {
        let p = StableParams::new(2.0, 1.0).unwrap();
        assert_eq!(stable_log_cf(&p, 0.0), Complex64::new(0.0, 0.0));
        let z = stable_log_cf(&p, 3.0);
        assert_abs_diff_eq!(z.re, -9.0, epsilon = 1e-12);
        // tan(pi) is zero up to rounding.
        assert!(z.im.abs() < 1e-12);
        let p1 = StableParams::new(1.0, 1.0).unwrap();
        let z1 = stable_log_cf(&p1, 1.0);
        assert_abs_diff_eq!(z1.re, -1.0);
        assert_abs_diff_eq!(z1.im, 0.0);
    }

    #[test]
    fn stable_cf_conjugate_symmetry() {
        for alpha in [0.7, 1.0, 1.2, 1.5, 2.0] {
            let p = StableParams::new(alpha, 0.8).unwrap();
            for u in [0.1, 0.5, 1.0, 2.0, 7.5] {
                let plus = stable_log_cf(&p, u);
                let minus = stable_log_cf(&p, -u);
                assert_abs_diff_eq!(plus.re, minus.re, epsilon = 1e-12);
                assert_abs_diff_eq!(plus.im, -minus.im, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn stable_cf_alpha_two_is_normal() {
        let b = 1.7;
        let p = StableParams::new(2.0, b).unwrap();
        for u in [-3.0, -0.5, 0.2, 1.0, 4.0] {
            let z = stable_log_cf(&p, u);
            assert_abs_diff_eq!(z.re, -b * u * u, epsilon = 1e-10);
            assert!(z.im.abs() < 1e-10 * (1.0 + u * u));
        }
    }

    #[test]
    fn stable_params_validation() {
        assert!(StableParams::new(0.0, 1.0).is_err());
        assert!(StableParams::new(2.5, 1.0).is_err());
        assert!(StableParams::new(1.0, 0.0).is_err());
    }

    /// Deterministic Pareto(alpha) grid by inverse CDF: its own oracle.
    fn pareto_grid(alpha: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                let u = (i as f64 + 0.5) / n as f64;
                u.powf(-1.0 / alpha)
            })
            .collect()
    }

    #[test]
    fn tail_fit_recovers_pareto_exponent() {
        for alpha in [0.75, 1.2, 1.5, 2.0] {
            let samples = pareto_grid(alpha, 20_000);
            let hill = fit_tail_exponent(&samples, TailMethod::Hill, &TailFitConfig::default())
                .unwrap();
            assert!(
                (hill.exponent - alpha).abs() < 2.0 * hill.stderr,
                "hill: alpha {alpha} got {} +- {}",
                hill.exponent,
                hill.stderr
            );
            let surv = fit_tail_exponent(
                &samples,
                TailMethod::LoglogSurvival,
                &TailFitConfig::default(),
            )
            .unwrap();
            assert!(
                (surv.exponent - alpha).abs() < 0.1,
                "survival: alpha {alpha} got {}",
                surv.exponent
            );
            assert!(surv.power_law_plausible, "curvature {}", surv.curvature);
        }
    }

    #[test]
    fn tail_fit_flags_exponential_as_non_power_law() {
        // Exponential quantile grid; survival decays faster than any power.
        let n = 20_000;
        let samples: Vec<f64> = (0..n)
            .map(|i| {
                let u = (i as f64 + 0.5) / n as f64;
                -u.ln()
            })
            .collect();
        let fit = fit_tail_exponent(
            &samples,
            TailMethod::LoglogSurvival,
            &TailFitConfig::default(),
        )
        .unwrap();
        assert!(!fit.power_law_plausible, "curvature {}", fit.curvature);
    }

    #[test]
    fn tail_fit_errors() {
        let constant = vec![1.0; 5000];
        assert!(matches!(
            fit_tail_exponent(
                &constant,
                TailMethod::LoglogSurvival,
                &TailFitConfig::default()
            ),
            Err(StatsError::NoUsableRange) | Err(StatsError::NoExceedances)
        ));
        let few = vec![1.0; 10];
        assert!(matches!(
            fit_tail_exponent(&few, TailMethod::Hill, &TailFitConfig::default()),
            Err(StatsError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn ks_identical_and_disjoint_samples() {
        let a = vec![0.3, 1.0, 2.0, 5.0];
        let ks = ks_two_sample(&a, &a).unwrap();
        assert_eq!(ks.distance, 0.0);
        assert_abs_diff_eq!(ks.p_value, 1.0);
        let ks = ks_two_sample(&[0.0], &[1.0]).unwrap();
        assert_eq!(ks.distance, 1.0);
    }

    #[test]
    fn ks_self_consistency_on_discrete_data() {
        let mut passes = 0;
        let trials = 40;
        for seed in 0..trials {
            let mut rng = rng_from_seed(1000 + seed);
            let a: Vec<f64> = (0..20_000)
                .map(|_| sample_geometric_half(&mut rng) as f64)
                .collect();
            let b: Vec<f64> = (0..20_000)
                .map(|_| sample_geometric_half(&mut rng) as f64)
                .collect();
            if ks_two_sample(&a, &b).unwrap().p_value > 0.001 {
                passes += 1;
            }
        }
        assert!(passes >= trials - 1, "{passes}/{trials}");
    }

    #[test]
    fn ks_normal_distance_of_normal_quantiles_is_small() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let n = 10_000;
        let xs: Vec<f64> = (0..n)
            .map(|i| normal.inverse_cdf((i as f64 + 0.5) / n as f64))
            .collect();
        assert!(ks_distance_to_std_normal(&xs).unwrap() < 1.0 / n as f64);
    }

    #[test]
    fn chi_square_uniform_sanity() {
        let observed = vec![1020u64, 980, 1010, 990];
        let probs = vec![0.25; 4];
        let res = chi_square_gof(&observed, &probs, 5.0).unwrap();
        assert_eq!(res.dof, 3);
        assert!(res.p_value > 0.01);
    }

    #[test]
    fn chi_square_detects_mismatch() {
        let observed = vec![2000u64, 1000, 500, 500];
        let probs = vec![0.25; 4];
        let res = chi_square_gof(&observed, &probs, 5.0).unwrap();
        assert!(res.p_value < 1e-6);
    }

    #[test]
    fn normalization_center_and_equivariance() {
        let n = 10_000u64;
        let v = 0.4;
        let delta = 2.4;
        let exact = vec![n as f64 / v; 5];
        let out = normalize_passage_times(&exact, n, v, delta).unwrap();
        assert!(out.iter().all(|x| x.abs() < 1e-9));

        // Shifting inputs by c * n^(2/delta) shifts outputs by exactly c.
        let scale = (n as f64).powf(2.0 / delta);
        let base = vec![31_000.0, 25_000.0, 40_000.0];
        let shifted: Vec<f64> = base.iter().map(|t| t + 3.0 * scale).collect();
        let a = normalize_passage_times(&base, n, v, delta).unwrap();
        let b = normalize_passage_times(&shifted, n, v, delta).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(y - x, 3.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn normalization_rejects_wrong_regime() {
        assert!(matches!(
            normalize_passage_times(&[1.0], 10, 0.5, 1.5),
            Err(StatsError::RegimeMismatch { .. })
        ));
        assert!(matches!(
            normalize_passage_times(&[1.0], 10, 0.5, 4.5),
            Err(StatsError::RegimeMismatch { .. })
        ));
        // delta = 4 takes the sqrt(n log n) branch.
        let out = normalize_passage_times(&[20.0], 10, 0.5, 4.0).unwrap();
        let expected = (20.0 - 20.0) / (10.0f64 * 10.0f64.ln()).sqrt();
        assert_abs_diff_eq!(out[0], expected);
    }

    #[test]
    fn growth_exponent_of_right_march_is_one() {
        let law = EnvironmentLaw::single(vec![1.0]).unwrap();
        let report = growth_exponent_subballistic(&law, &[100, 1000, 10_000], 50, 3);
        assert_abs_diff_eq!(report.slope_final, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(report.slope_sup, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn weakcon_value_at_time_zero_is_a_point_mass() {
        let law = EnvironmentLaw::single(vec![0.875, 0.875]).unwrap();
        let report = weakcon_check(
            &law,
            0.1,
            1.0,
            1000,
            WeakconFunctional::ValueAtTime(0.0),
            400,
            5,
        )
        .unwrap();
        assert!(report.distance < 1e-9, "distance {}", report.distance);
    }

    #[test]
    fn gaussian_check_on_synthetic_normal_input() {
        // Feed the KS helper with exact normal quantiles after the same
        // studentization the walk check applies.
        let normal = Normal::new(3.0, 2.0).unwrap();
        let n = 20_000;
        let xs: Vec<f64> = (0..n)
            .map(|i| normal.inverse_cdf((i as f64 + 0.5) / n as f64))
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
        let z: Vec<f64> = xs.iter().map(|x| (x - mean) / sd).collect();
        assert!(ks_distance_to_std_normal(&z).unwrap() < 0.02);
    }
}
