//! The approximating diffusion `dY = (1 - delta) dt + sqrt(2 Y) dB`
//! absorbed at zero (`2Y` is a squared Bessel process of dimension
//! `2(1 - delta)`). Full-truncation Euler-Maruyama with linear
//! interpolation of crossing times; the discretization bias is guarded by
//! the dt-halving check in the acceptance suite.

use crate::rng::{context_id, rng_from_seed, stream_seed};
use crate::stats::{fit_tail_exponent, ks_two_sample, KsResult, TailFit, TailFitConfig, TailMethod};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DiffusionError {
    #[error("need 0 <= a < y < b; got a={a}, y={y}, b={b}")]
    HittingArgsOutOfOrder { a: f64, y: f64, b: f64 },
    #[error("delta must be positive; got {delta}")]
    BadDelta { delta: f64 },
    #[error("invalid diffusion config: {0}")]
    InvalidConfig(String),
}

/// Path simulation parameters. `dt` must resolve the starting point
/// (`dt < y0 / 10`); monitored levels are positive and sorted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiffusionConfig {
    pub delta: f64,
    pub y0: f64,
    pub dt: f64,
    pub t_max: f64,
    /// Levels whose first hit (from either side) is recorded.
    pub levels: Vec<f64>,
    /// Stop the path at the first monitored level it touches.
    pub stop_on_levels: bool,
    /// Keep a downsampled trace.
    pub log_path: bool,
}

impl DiffusionConfig {
    /// Defaults: `dt = 1e-4 * max(y0, 1)`, horizon `1000 * y0`.
    pub fn new(delta: f64, y0: f64) -> Self {
        DiffusionConfig {
            delta,
            y0,
            dt: 1e-4 * y0.max(1.0),
            t_max: 1e3 * y0,
            levels: Vec::new(),
            stop_on_levels: false,
            log_path: false,
        }
    }

    pub fn validate(&self) -> Result<(), DiffusionError> {
        if self.delta.is_nan() || self.delta <= 0.0 {
            return Err(DiffusionError::BadDelta { delta: self.delta });
        }
        if self.y0.is_nan() || self.y0 <= 0.0 {
            return Err(DiffusionError::InvalidConfig(format!(
                "y0 must be positive; got {}",
                self.y0
            )));
        }
        if !(self.dt > 0.0 && self.dt < self.y0 / 10.0) {
            return Err(DiffusionError::InvalidConfig(format!(
                "dt = {} does not resolve y0 = {} (need 0 < dt < y0/10)",
                self.dt, self.y0
            )));
        }
        if self.levels.iter().any(|l| l.is_nan() || *l <= 0.0) {
            return Err(DiffusionError::InvalidConfig(
                "monitored levels must be positive".into(),
            ));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DiffusionError::InvalidConfig(
                "monitored levels must be strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// Functionals of one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionResult {
    pub seed: u64,
    /// Absorption time, linearly interpolated within the absorbing step;
    /// `None` when the path was stopped before absorption.
    pub tau0: Option<f64>,
    /// The run ended without absorption (horizon or level stop).
    pub censored: bool,
    /// Trapezoidal `\int Y dt` up to absorption or the stop time.
    pub area: f64,
    /// First hit time per monitored level, interpolated.
    pub level_hits: Vec<(f64, Option<f64>)>,
    pub final_time: f64,
    pub final_value: f64,
    pub path: Option<Vec<(f64, f64)>>,
}

impl DiffusionResult {
    pub fn level_hit(&self, level: f64) -> Option<f64> {
        self.level_hits
            .iter()
            .find(|(l, _)| *l == level)
            .and_then(|(_, t)| *t)
    }
}

pub fn simulate_y(config: &DiffusionConfig, seed: u64) -> DiffusionResult {
    let mut rng = rng_from_seed(seed);
    simulate_y_rng(config, seed, &mut rng)
}

pub fn simulate_y_rng<R: Rng>(config: &DiffusionConfig, seed: u64, rng: &mut R) -> DiffusionResult {
    debug_assert!(config.validate().is_ok());
    let drift = 1.0 - config.delta;
    let dt = config.dt;
    let mut y = config.y0;
    let mut t = 0.0f64;
    let mut area = 0.0f64;
    let mut hits: Vec<(f64, Option<f64>)> = config.levels.iter().map(|l| (*l, None)).collect();
    let mut pending_hits = config.levels.len();

    let stride = ((config.t_max / dt / 4096.0).ceil() as u64).max(1);
    let mut path = config.log_path.then(|| vec![(0.0, y)]);
    let mut step_count = 0u64;

    let mut tau0 = None;
    while t < config.t_max {
        let z: f64 = rng.sample(StandardNormal);
        let y_new = y + drift * dt + (2.0 * y.max(0.0) * dt).sqrt() * z;

        // First crossing inside this step, if the path is stopped by it.
        let mut stop_frac: Option<(f64, f64)> = None;
        if pending_hits > 0 && y != y_new {
            for (level, hit) in hits.iter_mut() {
                if hit.is_none() && (y - *level) * (y_new - *level) <= 0.0 {
                    let frac = (y - *level) / (y - y_new);
                    if (0.0..=1.0).contains(&frac) {
                        *hit = Some(t + dt * frac);
                        pending_hits -= 1;
                        if config.stop_on_levels
                            && stop_frac.map_or(true, |(f, _)| frac < f)
                        {
                            stop_frac = Some((frac, *level));
                        }
                    }
                }
            }
        }
        if let Some((frac, level)) = stop_frac {
            // Any monitored level is positive, so a level crossing always
            // precedes absorption within the step.
            area += 0.5 * (y + level) * dt * frac;
            t += dt * frac;
            y = level;
            break;
        }

        if y_new <= 0.0 {
            let frac = y / (y - y_new);
            let t_abs = t + dt * frac;
            area += 0.5 * y * dt * frac;
            tau0 = Some(t_abs);
            t = t_abs;
            y = 0.0;
            break;
        }

        area += 0.5 * (y + y_new) * dt;
        y = y_new;
        t += dt;
        step_count += 1;
        if let Some(p) = path.as_mut() {
            if step_count % stride == 0 {
                p.push((t, y));
            }
        }
    }

    DiffusionResult {
        seed,
        tau0,
        censored: tau0.is_none(),
        area,
        level_hits: hits,
        final_time: t,
        final_value: y,
        path,
    }
}

/// Closed-form probability that the diffusion started at `y` hits `a`
/// before `b`: `(b^delta - y^delta) / (b^delta - a^delta)`. The proof runs
/// through the stopped martingale `Y_t^delta`, which the Monte Carlo
/// invariant tests exercise directly.
pub fn hitting_prob(y: f64, a: f64, b: f64, delta: f64) -> Result<f64, DiffusionError> {
    if !(delta > 0.0) {
        return Err(DiffusionError::BadDelta { delta });
    }
    if !(0.0 <= a && a < y && y < b) {
        return Err(DiffusionError::HittingArgsOutOfOrder { a, y, b });
    }
    let bd = b.powf(delta);
    let yd = y.powf(delta);
    let ad = a.powf(delta);
    Ok((bd - yd) / (bd - ad))
}

/// Which path functional a scaling or tail experiment looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathFunctional {
    /// Absorption time `tau_0`.
    AbsorptionTime,
    /// Area under the path to absorption, compared on the `sqrt` scale
    /// (the event `area > y^2` parameterized by `y`).
    Area,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub functional: PathFunctional,
    pub y: f64,
    pub ks: KsResult,
    pub censored_scaled: usize,
    pub censored_unit: usize,
}

fn scaling_ctx() -> (u64, u64) {
    static CTX: OnceLock<(u64, u64)> = OnceLock::new();
    *CTX.get_or_init(|| {
        (
            context_id("diffusion.scaling.scaled"),
            context_id("diffusion.scaling.unit"),
        )
    })
}

/// Scaling check: `Y^y` run at its native resolution, rescaled by `y`
/// (time) or `y^2` (area), against `Y^1`. Equality in law is exact; the
/// report carries the two-sample KS distance.
pub fn verify_scaling(
    y: f64,
    delta: f64,
    functional: PathFunctional,
    reps: usize,
    master_seed: u64,
) -> Result<ScalingReport, DiffusionError> {
    if !(y > 0.0) {
        return Err(DiffusionError::InvalidConfig(format!(
            "scaling start must be positive; got {y}"
        )));
    }
    let (ctx_scaled, ctx_unit) = scaling_ctx();
    let collect = |config: &DiffusionConfig, ctx: u64, scale_time: f64, scale_area: f64| {
        let values: Vec<Option<f64>> = (0..reps as u64)
            .into_par_iter()
            .map(|rep| {
                let result = simulate_y(config, stream_seed(master_seed, ctx, rep));
                match functional {
                    PathFunctional::AbsorptionTime => result.tau0.map(|t| t / scale_time),
                    PathFunctional::Area => result.tau0.map(|_| result.area / scale_area),
                }
            })
            .collect();
        let censored = values.iter().filter(|v| v.is_none()).count();
        let kept: Vec<f64> = values.into_iter().flatten().collect();
        (kept, censored)
    };

    let scaled_config = DiffusionConfig::new(delta, y);
    let unit_config = DiffusionConfig::new(delta, 1.0);
    let (scaled, censored_scaled) = collect(&scaled_config, ctx_scaled, y, y * y);
    let (unit, censored_unit) = collect(&unit_config, ctx_unit, 1.0, 1.0);
    let ks = ks_two_sample(&scaled, &unit).expect("nonempty scaling samples");
    Ok(ScalingReport {
        functional,
        y,
        ks,
        censored_scaled,
        censored_unit,
    })
}

/// Coarse-vs-fine comparison of the first-exit outcome under a shared
/// driving noise.
#[derive(Debug, Clone, Serialize)]
pub struct DtRefinement {
    /// Fraction hitting `a` before `b` at step `dt`.
    pub p_coarse: f64,
    /// Same at step `dt/2`, driven by the same Brownian increments.
    pub p_fine: f64,
    /// Reps where the two resolutions disagreed on the outcome.
    pub disagreements: usize,
    /// Reps undecided at the horizon in either resolution (excluded).
    pub undecided: usize,
}

fn refinement_ctx() -> u64 {
    static CTX: OnceLock<u64> = OnceLock::new();
    *CTX.get_or_init(|| context_id("diffusion.dt_refinement"))
}

/// Measure the discretization shift of the exit probability
/// `P(hit a before b)` by running the same Brownian path at steps `dt` and
/// `dt/2` (each coarse increment is the sum of two fine ones). Because the
/// two estimates share their randomness, `p_coarse - p_fine` estimates the
/// bias itself rather than bias plus independent Monte Carlo noise.
pub fn hit_prob_dt_refinement(
    delta: f64,
    y0: f64,
    a: f64,
    b: f64,
    dt: f64,
    t_max: f64,
    reps: usize,
    master_seed: u64,
) -> Result<DtRefinement, DiffusionError> {
    if !(0.0 <= a && a < y0 && y0 < b) {
        return Err(DiffusionError::HittingArgsOutOfOrder { a, y: y0, b });
    }
    let drift = 1.0 - delta;
    let half = 0.5 * dt;
    let ctx = refinement_ctx();

    // None = still running; Some(true) = hit a first.
    #[inline]
    fn advance(y: &mut f64, decided: &mut Option<bool>, a: f64, b: f64, drift: f64, h: f64, z: f64) {
        if decided.is_some() {
            return;
        }
        let y_new = *y + drift * h + (2.0 * y.max(0.0) * h).sqrt() * z;
        let crossed_a = (*y - a) * (y_new - a) <= 0.0;
        let crossed_b = (*y - b) * (y_new - b) <= 0.0;
        *decided = match (crossed_a, crossed_b) {
            (true, false) => Some(true),
            (false, true) => Some(false),
            (true, true) => {
                let fa = (*y - a) / (*y - y_new);
                let fb = (*y - b) / (*y - y_new);
                Some(fa < fb)
            }
            (false, false) => None,
        };
        *y = y_new;
    }

    let outcomes: Vec<(Option<bool>, Option<bool>)> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = crate::rng::rep_rng(master_seed, ctx, rep);
            let mut y_coarse = y0;
            let mut y_fine = y0;
            let mut coarse: Option<bool> = None;
            let mut fine: Option<bool> = None;
            let steps = (t_max / dt).ceil() as u64;
            for _ in 0..steps {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                advance(&mut y_fine, &mut fine, a, b, drift, half, z1);
                advance(&mut y_fine, &mut fine, a, b, drift, half, z2);
                let zc = (z1 + z2) * std::f64::consts::FRAC_1_SQRT_2;
                advance(&mut y_coarse, &mut coarse, a, b, drift, dt, zc);
                if coarse.is_some() && fine.is_some() {
                    break;
                }
            }
            (coarse, fine)
        })
        .collect();

    let mut n = 0usize;
    let mut hit_coarse = 0usize;
    let mut hit_fine = 0usize;
    let mut disagreements = 0usize;
    let mut undecided = 0usize;
    for (coarse, fine) in outcomes {
        match (coarse, fine) {
            (Some(c), Some(f)) => {
                n += 1;
                hit_coarse += usize::from(c);
                hit_fine += usize::from(f);
                disagreements += usize::from(c != f);
            }
            _ => undecided += 1,
        }
    }
    Ok(DtRefinement {
        p_coarse: hit_coarse as f64 / n as f64,
        p_fine: hit_fine as f64 / n as f64,
        disagreements,
        undecided,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TailExperiment {
    pub functional: PathFunctional,
    pub fit: TailFit,
    pub reps: usize,
    pub censored: usize,
    /// Censored paths above 1% of the exceedance count at the smallest
    /// threshold: the exponent cannot be trusted.
    pub censoring_flagged: bool,
}

fn tail_ctx() -> u64 {
    static CTX: OnceLock<u64> = OnceLock::new();
    *CTX.get_or_init(|| context_id("diffusion.tail_experiment"))
}

/// Survival-exponent experiment for `tau_0` (expected exponent `delta`) or
/// for `sqrt(area)` (the event `area > y^2`, also expected exponent
/// `delta`), starting from `Y_0 = 1`.
pub fn tail_experiment(
    delta: f64,
    functional: PathFunctional,
    reps: usize,
    range: (f64, f64),
    master_seed: u64,
) -> Result<TailExperiment, DiffusionError> {
    if !(delta > 1.0) {
        return Err(DiffusionError::BadDelta { delta });
    }
    let config = DiffusionConfig::new(delta, 1.0);
    let ctx = tail_ctx();
    let raw: Vec<(Option<f64>, f64)> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let r = simulate_y(&config, stream_seed(master_seed, ctx, rep));
            (r.tau0, r.area)
        })
        .collect();
    let censored = raw.iter().filter(|(t, _)| t.is_none()).count();
    let samples: Vec<f64> = raw
        .iter()
        .filter(|(t, _)| t.is_some())
        .map(|(t, area)| match functional {
            PathFunctional::AbsorptionTime => t.unwrap(),
            PathFunctional::Area => area.sqrt(),
        })
        .collect();
    let fit = fit_tail_exponent(
        &samples,
        TailMethod::LoglogSurvival,
        &TailFitConfig {
            range: Some(range),
            ..Default::default()
        },
    )
    .map_err(|e| DiffusionError::InvalidConfig(format!("tail fit failed: {e}")))?;
    let exceed_lo = samples.iter().filter(|s| **s > range.0).count();
    let censoring_flagged = censored as f64 > 0.01 * (exceed_lo + censored) as f64;
    Ok(TailExperiment {
        functional,
        fit,
        reps,
        censored,
        censoring_flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_horizon_is_censored_with_zero_area() {
        let config = DiffusionConfig {
            t_max: 0.0,
            ..DiffusionConfig::new(1.7, 1.0)
        };
        let r = simulate_y(&config, 5);
        assert!(r.censored);
        assert_eq!(r.tau0, None);
        assert_eq!(r.area, 0.0);
        assert_eq!(r.final_value, 1.0);
    }

    #[test]
    fn hitting_prob_formula() {
        // Boundary limits.
        assert_abs_diff_eq!(hitting_prob(0.5001, 0.5, 2.0, 2.5).unwrap(), 1.0, epsilon = 1e-3);
        assert_abs_diff_eq!(hitting_prob(1.9999, 0.5, 2.0, 2.5).unwrap(), 0.0, epsilon = 1e-3);
        // Linear case delta = 1.
        assert_abs_diff_eq!(hitting_prob(1.0, 0.0, 2.0, 1.0).unwrap(), 0.5, epsilon = 1e-12);
        // Reference value evaluated from the formula itself.
        let expected = (2f64.powf(2.5) - 1.0) / (2f64.powf(2.5) - 0.5f64.powf(2.5));
        assert_abs_diff_eq!(
            hitting_prob(1.0, 0.5, 2.0, 2.5).unwrap(),
            expected,
            epsilon = 1e-12
        );
        assert!(hitting_prob(1.0, 1.5, 2.0, 2.5).is_err());
        assert!(hitting_prob(1.0, 0.5, 2.0, 0.0).is_err());
    }

    #[test]
    fn hitting_prob_is_monotone_and_scale_invariant() {
        let (a, b, delta) = (0.5, 2.0, 2.5);
        let mut last = 1.0;
        for i in 1..20 {
            let y = a + (b - a) * i as f64 / 20.0;
            let p = hitting_prob(y, a, b, delta).unwrap();
            assert!(p < last);
            last = p;
            for c in [0.1, 3.0, 17.0] {
                assert_abs_diff_eq!(
                    hitting_prob(c * y, c * a, c * b, delta).unwrap(),
                    p,
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn absorption_is_almost_sure_for_transient_delta() {
        let config = DiffusionConfig::new(1.5, 1.0);
        let censored = (0..2000)
            .filter(|seed| simulate_y(&config, *seed).censored)
            .count();
        assert!(
            (censored as f64) < 0.005 * 2000.0,
            "censored {censored} of 2000"
        );
    }

    #[test]
    fn censoring_decreases_with_doubling_horizon() {
        let reps = 4000u64;
        let frac = |t_max: f64| {
            let config = DiffusionConfig {
                t_max,
                ..DiffusionConfig::new(1.5, 1.0)
            };
            (0..reps).filter(|s| simulate_y(&config, *s).censored).count() as f64 / reps as f64
        };
        let f5 = frac(5.0);
        let f10 = frac(10.0);
        let f20 = frac(20.0);
        let se = |f: f64| (f * (1.0 - f) / reps as f64).sqrt();
        assert!(f10 < f5 + 2.0 * se(f5), "{f5} -> {f10}");
        assert!(f20 < f10 + 2.0 * se(f10), "{f10} -> {f20}");
    }

    #[test]
    fn mc_hitting_prob_close_to_closed_form() {
        let (a, b, delta) = (0.5, 2.0, 2.5);
        let config = DiffusionConfig {
            levels: vec![a, b],
            stop_on_levels: true,
            dt: 4e-4,
            ..DiffusionConfig::new(delta, 1.0)
        };
        let reps = 20_000u64;
        let mut hit_a = 0u64;
        let mut decided = 0u64;
        for seed in 0..reps {
            let r = simulate_y(&config, seed);
            let ta = r.level_hit(a);
            let tb = r.level_hit(b);
            match (ta, tb) {
                (Some(x), Some(y)) => {
                    decided += 1;
                    if x < y {
                        hit_a += 1;
                    }
                }
                (Some(_), None) => {
                    decided += 1;
                    hit_a += 1;
                }
                (None, Some(_)) => decided += 1,
                (None, None) => {}
            }
        }
        let p_hat = hit_a as f64 / decided as f64;
        let p = hitting_prob(1.0, a, b, delta).unwrap();
        let se = (p * (1.0 - p) / decided as f64).sqrt();
        assert!(
            (p_hat - p).abs() < 4.0 * se + 0.01,
            "p_hat {p_hat} vs closed form {p}"
        );
    }

    #[test]
    fn stopped_martingale_mean_is_preserved() {
        // E[(Y stopped at a or b)^delta] = y0^delta.
        let (a, b, delta) = (0.5, 2.0, 2.5);
        let config = DiffusionConfig {
            levels: vec![a, b],
            stop_on_levels: true,
            dt: 2e-4,
            ..DiffusionConfig::new(delta, 1.0)
        };
        let reps = 20_000u64;
        let mut values = Vec::new();
        for seed in 0..reps {
            let r = simulate_y(&config, seed);
            let ta = r.level_hit(a);
            let tb = r.level_hit(b);
            let stopped = match (ta, tb) {
                (Some(x), Some(y)) => {
                    if x < y {
                        a
                    } else {
                        b
                    }
                }
                (Some(_), None) => a,
                (None, Some(_)) => b,
                (None, None) => continue,
            };
            values.push(stopped.powf(delta));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        assert!(
            (mean - 1.0).abs() < 4.0 * se + 0.02,
            "stopped mean {mean}, se {se}"
        );
    }

    #[test]
    fn level_hit_times_are_ordered_going_up() {
        // Started below both levels, the lower level is hit first.
        let config = DiffusionConfig {
            levels: vec![2.0, 3.0],
            ..DiffusionConfig::new(1.2, 1.0)
        };
        let mut seen = 0;
        for seed in 0..200 {
            let r = simulate_y(&config, seed);
            if let (Some(t2), Some(t3)) = (r.level_hit(2.0), r.level_hit(3.0)) {
                assert!(t2 < t3);
                seen += 1;
            }
        }
        assert!(seen > 10);
    }

    #[test]
    fn results_are_bit_reproducible() {
        let config = DiffusionConfig {
            levels: vec![0.5, 2.0],
            log_path: true,
            ..DiffusionConfig::new(1.5, 1.0)
        };
        let a = simulate_y(&config, 99);
        let b = simulate_y(&config, 99);
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        assert!(DiffusionConfig::new(1.5, 1.0).validate().is_ok());
        let bad_dt = DiffusionConfig {
            dt: 0.5,
            ..DiffusionConfig::new(1.5, 1.0)
        };
        assert!(bad_dt.validate().is_err());
        let bad_delta = DiffusionConfig::new(0.0, 1.0);
        assert!(bad_delta.validate().is_err());
        let bad_levels = DiffusionConfig {
            levels: vec![2.0, 1.0],
            ..DiffusionConfig::new(1.5, 1.0)
        };
        assert!(bad_levels.validate().is_err());
    }
}
