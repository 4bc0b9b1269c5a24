//! Cookie environments: per-site probability stacks, the i.i.d. law over
//! stacks, the drift parameter `delta`, and the regime classification.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Classification snap width for the regime boundaries. Laws built from
/// decimal literals (e.g. three cookies of 0.9) land within a few ulps of
/// the intended boundary value, so exact float comparison would misfile
/// them.
const BOUNDARY_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("law must have at least one atom")]
    EmptyAtoms,
    #[error("law must have at least one cookie per site (M >= 1)")]
    ZeroCookies,
    #[error("atom {atom}: stack has {got} cookies, law declares M = {expected}")]
    WrongStackLength {
        atom: usize,
        expected: usize,
        got: usize,
    },
    #[error("atom {atom}, cookie {index}: probability {value} outside [0, 1]")]
    ProbOutOfRange {
        atom: usize,
        index: usize,
        value: f64,
    },
    #[error("atom {atom}: weight {weight} is not positive")]
    NonPositiveWeight { atom: usize, weight: f64 },
    #[error("atom weights sum to {sum}, expected 1 within 1e-12")]
    WeightsNotNormalized { sum: f64 },
    #[error("regime classification takes delta >= 0; got {delta}. Reflect the law first (reflected laws have delta of opposite sign)")]
    NegativeDelta { delta: f64 },
    #[error("failed to read law file: {0}")]
    Io(String),
    #[error("failed to parse law file: {0}")]
    Parse(String),
}

/// One site's pile of cookies: `probs[i-1]` is the probability of stepping
/// right on the `i`-th visit. Queries beyond the stack return the fair 1/2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CookieStack {
    probs: Vec<f64>,
}

impl CookieStack {
    pub fn new(probs: Vec<f64>) -> Self {
        CookieStack { probs }
    }

    /// Stack with `m` placebo cookies (all 1/2).
    pub fn placebo(m: usize) -> Self {
        CookieStack {
            probs: vec![0.5; m],
        }
    }

    /// Number of cookies actually stored (the law's `M`).
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Probability of a right step on visit `i` (1-based). 1/2 beyond `M`.
    pub fn prob(&self, visit: usize) -> f64 {
        if visit == 0 {
            panic!("cookie visits are 1-based");
        }
        self.probs.get(visit - 1).copied().unwrap_or(0.5)
    }

    /// Raw slice of the stored cookies.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Total drift of this stack: `sum_i (2 p_i - 1)`.
    pub fn drift(&self) -> f64 {
        self.probs.iter().map(|p| 2.0 * p - 1.0).sum()
    }

    /// The stack with every cookie replaced by its mirror `1 - p`.
    pub fn reflected(&self) -> Self {
        CookieStack {
            probs: self.probs.iter().map(|p| 1.0 - p).collect(),
        }
    }
}

/// Finite discrete law of the per-site cookie stack: atoms with positive
/// weights summing to one, all of the same depth `M`.
///
/// Finite support keeps `delta` and the non-degeneracy products exactly
/// computable, which the enumeration oracles rely on.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentLaw {
    m: usize,
    atoms: Vec<(CookieStack, f64)>,
    /// Cumulative weights for sampling.
    cumulative: Vec<f64>,
}

/// Serde mirror of the on-disk law format.
#[derive(Debug, Serialize, Deserialize)]
struct LawFile {
    #[serde(rename = "M")]
    m: usize,
    atoms: Vec<LawAtom>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LawAtom {
    probs: Vec<f64>,
    weight: f64,
}

impl EnvironmentLaw {
    pub fn new(m: usize, atoms: Vec<(Vec<f64>, f64)>) -> Result<Self, EnvError> {
        if m == 0 {
            return Err(EnvError::ZeroCookies);
        }
        if atoms.is_empty() {
            return Err(EnvError::EmptyAtoms);
        }
        let mut sum = 0.0;
        for (idx, (probs, weight)) in atoms.iter().enumerate() {
            if probs.len() != m {
                return Err(EnvError::WrongStackLength {
                    atom: idx,
                    expected: m,
                    got: probs.len(),
                });
            }
            for (i, p) in probs.iter().enumerate() {
                if !(0.0..=1.0).contains(p) || p.is_nan() {
                    return Err(EnvError::ProbOutOfRange {
                        atom: idx,
                        index: i + 1,
                        value: *p,
                    });
                }
            }
            if !(*weight > 0.0) {
                return Err(EnvError::NonPositiveWeight {
                    atom: idx,
                    weight: *weight,
                });
            }
            sum += weight;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(EnvError::WeightsNotNormalized { sum });
        }
        let mut cumulative = Vec::with_capacity(atoms.len());
        let mut acc = 0.0;
        for (_, w) in &atoms {
            acc += w;
            cumulative.push(acc);
        }
        // Guard against rounding in the last slot.
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Ok(EnvironmentLaw {
            m,
            atoms: atoms
                .into_iter()
                .map(|(p, w)| (CookieStack::new(p), w))
                .collect(),
            cumulative,
        })
    }

    /// Deterministic law: the same stack at every site.
    pub fn single(probs: Vec<f64>) -> Result<Self, EnvError> {
        let m = probs.len();
        EnvironmentLaw::new(m, vec![(probs, 1.0)])
    }

    /// All-placebo law with `m` cookies of 1/2 (delta = 0).
    pub fn placebo(m: usize) -> Self {
        EnvironmentLaw::single(vec![0.5; m]).expect("placebo law is valid")
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&CookieStack, f64)> {
        self.atoms.iter().map(|(s, w)| (s, *w))
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn stack(&self, atom: usize) -> &CookieStack {
        &self.atoms[atom].0
    }

    /// Average total drift per site:
    /// `delta = E[sum_{i=1}^{M} (2 omega(i) - 1)]`.
    pub fn delta(&self) -> f64 {
        self.atoms.iter().map(|(s, w)| w * s.drift()).sum()
    }

    /// The law with every cookie mirrored (`p -> 1 - p`), weights unchanged.
    /// The mirrored walk is distributed as the negated original walk, so
    /// `delta` flips sign exactly.
    pub fn reflected(&self) -> Self {
        EnvironmentLaw {
            m: self.m,
            atoms: self
                .atoms
                .iter()
                .map(|(s, w)| (s.reflected(), *w))
                .collect(),
            cumulative: self.cumulative.clone(),
        }
    }

    /// Non-degeneracy: both `E[prod_i omega(i)]` and `E[prod_i (1-omega(i))]`
    /// must be positive, i.e. the walk can make `M` consecutive steps in
    /// either direction from a fresh site.
    pub fn is_nondegenerate(&self) -> bool {
        let up: f64 = self
            .atoms
            .iter()
            .map(|(s, w)| w * s.probs().iter().product::<f64>())
            .sum();
        let down: f64 = self
            .atoms
            .iter()
            .map(|(s, w)| w * s.probs().iter().map(|p| 1.0 - p).product::<f64>())
            .sum();
        up > 0.0 && down > 0.0
    }

    /// Index of a weighted random atom.
    pub fn sample_atom<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.atoms.len() == 1 {
            return 0;
        }
        let u: f64 = rng.random();
        match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&u).expect("weights are finite"))
        {
            Ok(i) | Err(i) => i.min(self.atoms.len() - 1),
        }
    }

    /// Parse from the TOML law format:
    ///
    /// ```toml
    /// M = 2
    /// atoms = [{ probs = [0.875, 0.875], weight = 1.0 }]
    /// ```
    pub fn from_toml_str(text: &str) -> Result<Self, EnvError> {
        let file: LawFile = toml::from_str(text).map_err(|e| EnvError::Parse(e.to_string()))?;
        EnvironmentLaw::new(
            file.m,
            file.atoms.into_iter().map(|a| (a.probs, a.weight)).collect(),
        )
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, EnvError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EnvError::Io(format!("{}: {e}", path.display())))?;
        EnvironmentLaw::from_toml_str(&text)
    }

    /// Serialize to the TOML law format.
    pub fn to_toml_string(&self) -> String {
        let file = LawFile {
            m: self.m,
            atoms: self
                .atoms
                .iter()
                .map(|(s, w)| LawAtom {
                    probs: s.probs().to_vec(),
                    weight: *w,
                })
                .collect(),
        };
        toml::to_string(&file).expect("law serializes")
    }
}

/// Asymptotic regime of the walk, determined by `delta` alone.
///
/// Boundary values are filed by convention: `delta = 1` is recurrent,
/// `delta = 2` transient with zero speed, and `delta = 4` gets its own
/// bucket (the `sqrt(n log n)` normalization).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `delta` in [0, 1]: the walk returns to the origin infinitely often.
    Recurrent,
    /// `delta` in (1, 2]: transient to the right, zero linear speed.
    TransientZeroSpeed,
    /// `delta` in (2, 4): positive speed, stable fluctuations of index
    /// `delta / 2`.
    StableFluct,
    /// `delta` = 4: positive speed, Gaussian limit under `sqrt(n log n)`.
    StableBoundary,
    /// `delta` > 4: positive speed, central limit theorem under `sqrt(n)`.
    Gaussian,
}

/// Classify the regime of a non-negative `delta`. Negative inputs are a
/// usage error: reflect the law first.
pub fn classify_regime(delta: f64) -> Result<Regime, EnvError> {
    if delta < -BOUNDARY_EPS || delta.is_nan() {
        return Err(EnvError::NegativeDelta { delta });
    }
    let snapped = [1.0, 2.0, 4.0]
        .iter()
        .find(|b| (delta - **b).abs() <= BOUNDARY_EPS)
        .copied()
        .unwrap_or(delta.max(0.0));
    Ok(if snapped <= 1.0 {
        Regime::Recurrent
    } else if snapped <= 2.0 {
        Regime::TransientZeroSpeed
    } else if snapped < 4.0 {
        Regime::StableFluct
    } else if snapped == 4.0 {
        Regime::StableBoundary
    } else {
        Regime::Gaussian
    })
}

/// Per-site sampled state of one realized environment: which atom the site
/// drew and how many cookies have been eaten there.
#[derive(Debug, Clone, Copy)]
struct SiteState {
    atom: u32,
    visits: u32,
}

/// One realized cookie environment over the visited portion of the lattice,
/// extended lazily: a site's stack is sampled exactly once, on first visit,
/// and then frozen. Visit counters saturate at `M` (everything beyond is
/// fair anyway).
///
/// Intended for a single trajectory driven by a single worker; the law it
/// samples from is shared and immutable.
#[derive(Debug)]
pub struct Environment<'a> {
    law: &'a EnvironmentLaw,
    /// Sites 0, 1, 2, ...
    nonneg: Vec<SiteState>,
    /// Sites -1, -2, ...
    neg: Vec<SiteState>,
}

impl<'a> Environment<'a> {
    pub fn new(law: &'a EnvironmentLaw) -> Self {
        Environment {
            law,
            nonneg: Vec::new(),
            neg: Vec::new(),
        }
    }

    pub fn law(&self) -> &EnvironmentLaw {
        self.law
    }

    fn state_mut<R: Rng + ?Sized>(&mut self, site: i64, rng: &mut R) -> &mut SiteState {
        let law = self.law;
        let (vec, idx) = if site >= 0 {
            (&mut self.nonneg, site as usize)
        } else {
            (&mut self.neg, (-site - 1) as usize)
        };
        // The walk is nearest-neighbor, so sites are touched contiguously
        // and each extension adds exactly one freshly sampled site.
        while vec.len() <= idx {
            let atom = law.sample_atom(rng) as u32;
            vec.push(SiteState { atom, visits: 0 });
        }
        &mut vec[idx]
    }

    /// Probability of stepping right on the *current* visit to `site`;
    /// consumes one cookie (the visit counter advances).
    pub fn eat_cookie<R: Rng + ?Sized>(&mut self, site: i64, rng: &mut R) -> f64 {
        let law = self.law;
        let m = law.m as u32;
        let state = self.state_mut(site, rng);
        let visits = state.visits;
        if visits < m {
            state.visits += 1;
            law.atoms[state.atom as usize].0.probs()[visits as usize]
        } else {
            0.5
        }
    }

    /// Cookie the walker *would* eat on visit number `visit` (1-based) at
    /// `site`, sampling the site if new. Does not advance the counter.
    pub fn peek_cookie<R: Rng + ?Sized>(&mut self, site: i64, visit: usize, rng: &mut R) -> f64 {
        let law = self.law;
        let state = self.state_mut(site, rng);
        law.atoms[state.atom as usize].0.prob(visit)
    }

    /// Number of cookies eaten at `site` so far (saturated at `M`).
    pub fn visits(&self, site: i64) -> u32 {
        let (vec, idx) = if site >= 0 {
            (&self.nonneg, site as usize)
        } else {
            (&self.neg, (-site - 1) as usize)
        };
        vec.get(idx).map_or(0, |s| s.visits)
    }
}
