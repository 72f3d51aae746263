//! Beta meta-model of fake score mixing.
//!
//! The mixing coefficient `alpha` of a simulated presentation attack is a
//! Beta-distributed random variable parameterized, for interpretability, by
//! its mean and standard deviation rather than the usual shape pair. This
//! module provides the parameter conversion, feasibility clamping, seeded
//! sampling, the Beta CDF, the attack-impact measure `p(alpha > 0.5)`,
//! method-of-moments fitting from score pools, and the registry of named
//! attack scenarios.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Gamma as GammaDist};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{domain, substream};
use crate::scalar::{real, to_f64, Real};
use crate::special::incomplete_beta;

/// Default margin used when clamping estimates into the feasible region.
pub const DEFAULT_CLAMP_EPSILON: f64 = 1e-3;

/// Beta distribution on [0, 1] described by mean and standard deviation.
///
/// Feasibility requires `0 < mu < 1` and `0 < sigma < sqrt(mu (1 - mu))`,
/// both strict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaMeanStd<F> {
    mu: F,
    sigma: F,
}

impl<F: Real> BetaMeanStd<F> {
    pub fn new(mu: F, sigma: F) -> Result<Self> {
        let feasible = mu > F::zero()
            && mu < F::one()
            && sigma > F::zero()
            && sigma * sigma < mu * (F::one() - mu)
            && mu.is_finite()
            && sigma.is_finite();
        if !feasible {
            return Err(Error::InfeasibleBeta {
                mu: to_f64(mu),
                sigma: to_f64(sigma),
            });
        }
        Ok(BetaMeanStd { mu, sigma })
    }

    pub fn mu(&self) -> F {
        self.mu
    }

    pub fn sigma(&self) -> F {
        self.sigma
    }

    /// Shape-parameter form of the same distribution.
    pub fn shape(&self) -> BetaShape<F> {
        shape_from_mean_std(self)
    }
}

impl<'de, F: Real + Deserialize<'de>> Deserialize<'de> for BetaMeanStd<F> {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        struct Raw<F> {
            mu: F,
            sigma: F,
        }
        let raw = Raw::deserialize(deserializer)?;
        BetaMeanStd::new(raw.mu, raw.sigma).map_err(serde::de::Error::custom)
    }
}

/// Beta distribution in shape form, `p > 0`, `q > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaShape<F> {
    pub p: F,
    pub q: F,
}

impl<F: Real> BetaShape<F> {
    pub fn new(p: F, q: F) -> Result<Self> {
        if p <= F::zero() || q <= F::zero() || !p.is_finite() || !q.is_finite() {
            return Err(Error::OutOfRange {
                context: "beta shape parameters",
                value: to_f64(p.min(q)),
                low: 0.0,
                high: f64::INFINITY,
            });
        }
        Ok(BetaShape { p, q })
    }

    pub fn mean(&self) -> F {
        self.p / (self.p + self.q)
    }

    pub fn variance(&self) -> F {
        let s = self.p + self.q;
        self.p * self.q / (s * s * (s + F::one()))
    }
}

/// Convert (mean, std) to shape parameters.
///
/// With `nu = mu (1 - mu) / sigma^2 - 1`: `p = mu nu`, `q = (1 - mu) nu`.
pub fn shape_from_mean_std<F: Real>(ms: &BetaMeanStd<F>) -> BetaShape<F> {
    let mu = ms.mu;
    let one = F::one();
    let nu = mu * (one - mu) / (ms.sigma * ms.sigma) - one;
    BetaShape {
        p: mu * nu,
        q: (one - mu) * nu,
    }
}

/// Clamp raw estimates to the closest admissible value, keeping an `epsilon`
/// margin inside the feasible region. Total on finite inputs and idempotent.
pub fn clamp_to_admissible<F: Real>(mu_raw: F, sigma_raw: F, epsilon: F) -> BetaMeanStd<F> {
    debug_assert!(epsilon > F::zero());
    let one = F::one();
    let mu = mu_raw.max(epsilon).min(one - epsilon);
    let sigma_hi = (mu * (one - mu)).sqrt() - epsilon;
    let sigma_lo = epsilon.min(sigma_hi);
    let sigma = sigma_raw.max(sigma_lo).min(sigma_hi.max(sigma_lo));
    BetaMeanStd { mu, sigma }
}

/// Draw `n` mixing coefficients from the Beta distribution.
///
/// Sampling uses the ratio of two Gamma draws, `X / (X + Y)` with
/// `X ~ Gamma(p, 1)`, `Y ~ Gamma(q, 1)`. Draws always run at `f64` and are
/// converted afterwards, so the stream for a given seed does not depend on
/// the scalar type.
pub fn sample_alpha<F: Real>(shape: &BetaShape<F>, n: usize, seed: u64) -> Vec<F> {
    let mut rng = substream(seed, &[domain::SAMPLE_ALPHA]);
    (0..n).map(|_| draw_alpha(shape, &mut rng)).collect()
}

/// One Beta draw from an existing generator.
pub fn draw_alpha<F: Real>(shape: &BetaShape<F>, rng: &mut impl Rng) -> F {
    let p = to_f64(shape.p);
    let q = to_f64(shape.q);
    let gp = GammaDist::new(p, 1.0).expect("validated shape");
    let gq = GammaDist::new(q, 1.0).expect("validated shape");
    let x: f64 = gp.sample(rng);
    let y: f64 = gq.sample(rng);
    let sum = x + y;
    let alpha = if sum > 0.0 { x / sum } else {
        // both draws underflowed (extreme shapes); fall back to the mean
        p / (p + q)
    };
    real(alpha)
}

/// Beta CDF at `x` (regularized incomplete beta).
pub fn beta_cdf<F: Real>(shape: &BetaShape<F>, x: F) -> Result<F> {
    if x < F::zero() || x > F::one() || !x.is_finite() {
        return Err(Error::OutOfRange {
            context: "beta_cdf argument",
            value: to_f64(x),
            low: 0.0,
            high: 1.0,
        });
    }
    Ok(incomplete_beta(shape.p, shape.q, x))
}

/// Attack impact `p(alpha > 0.5)` for the scenario's Beta distribution.
pub fn attack_impact<F: Real>(ms: &BetaMeanStd<F>) -> F {
    let shape = shape_from_mean_std(ms);
    F::one() - incomplete_beta(shape.p, shape.q, real(0.5))
}

/// Method-of-moments fit of the mixing parameters, with diagnostics.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MetaFit<F> {
    /// Feasible parameters after clamping.
    pub params: BetaMeanStd<F>,
    pub mu_raw: F,
    pub sigma_raw: F,
    pub mu_clamped: bool,
    pub sigma_clamped: bool,
    /// The sigma estimate had a negative radicand and was floored to epsilon.
    pub negative_radicand: bool,
}

fn mean_var<F: Real>(name: &'static str, xs: &[F]) -> Result<(F, F)> {
    if xs.len() < 2 {
        return Err(Error::PoolTooSmall {
            name,
            min: 2,
            found: xs.len(),
        });
    }
    let n = real::<F>(xs.len() as f64);
    let mean = xs.iter().copied().sum::<F>() / n;
    // unbiased sample variance
    let ss = xs
        .iter()
        .map(|&x| {
            let d = x - mean;
            d * d
        })
        .sum::<F>();
    Ok((mean, ss / (n - F::one())))
}

/// Estimate `(mu_alpha, sigma_alpha)` from genuine, impostor and fake score
/// pools via the moment identities of the mixing model, then clamp into the
/// feasible region.
///
/// `mu_alpha = (m_F - m_I) / (m_G - m_I)` and
/// `sigma_alpha^2 = (v_F - mu^2 v_G - (1-mu)^2 v_I) / (v_G + v_I + (m_G - m_I)^2)`.
pub fn fit_meta_parameters<F: Real>(
    genuine: &[F],
    impostor: &[F],
    fake: &[F],
    epsilon: F,
) -> Result<MetaFit<F>> {
    let (mg, vg) = mean_var("genuine", genuine)?;
    let (mi, vi) = mean_var("impostor", impostor)?;
    let (mf, vf) = mean_var("fake", fake)?;

    let spread = mg - mi;
    if to_f64(spread).abs() < 1e-12 {
        return Err(Error::DegeneratePools);
    }

    let mu_raw = (mf - mi) / spread;
    let one = F::one();
    let radicand =
        (vf - mu_raw * mu_raw * vg - (one - mu_raw) * (one - mu_raw) * vi) / (vg + vi + spread * spread);
    let negative_radicand = radicand < F::zero();
    let sigma_raw = if negative_radicand {
        F::zero()
    } else {
        radicand.sqrt()
    };

    let params = clamp_to_admissible(mu_raw, sigma_raw, epsilon);
    Ok(MetaFit {
        params,
        mu_raw,
        sigma_raw,
        mu_clamped: params.mu != mu_raw,
        sigma_clamped: params.sigma != sigma_raw,
        negative_radicand,
    })
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

/// Named attack scenario: mixing parameters plus the cached impact value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackScenario<F> {
    name: String,
    #[serde(flatten)]
    meta: BetaMeanStd<F>,
    #[serde(skip)]
    impact: F,
}

impl<F: Real> AttackScenario<F> {
    pub fn new(name: impl Into<String>, meta: BetaMeanStd<F>) -> Self {
        let impact = attack_impact(&meta);
        AttackScenario {
            name: name.into(),
            meta,
            impact,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn meta(&self) -> &BetaMeanStd<F> {
        &self.meta
    }

    pub fn impact(&self) -> F {
        self.impact
    }
}

impl<'de, F: Real + Deserialize<'de>> Deserialize<'de> for AttackScenario<F> {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        struct Raw<F> {
            name: String,
            mu: F,
            sigma: F,
        }
        let raw = Raw::deserialize(deserializer)?;
        let meta = BetaMeanStd::new(raw.mu, raw.sigma).map_err(serde::de::Error::custom)?;
        Ok(AttackScenario::new(raw.name, meta))
    }
}

/// Catalog of named scenarios, keyed by name.
///
/// Ships with six presets (low/medium/high for fingerprint and face);
/// additional scenarios can be merged from JSON without code changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
#[serde(bound(
    serialize = "F: Real + Serialize",
    deserialize = "F: Real + serde::de::DeserializeOwned"
))]
pub struct ScenarioRegistry<F: Real> {
    entries: BTreeMap<String, AttackScenario<F>>,
}

/// Built-in preset parameters: (name, mu, sigma).
pub const BUILTIN_SCENARIOS: [(&str, f64, f64); 6] = [
    ("fingerprint_low", 0.08, 0.09),
    ("fingerprint_medium", 0.23, 0.20),
    ("fingerprint_high", 0.40, 0.26),
    ("face_low", 0.38, 0.03),
    ("face_medium", 0.78, 0.19),
    ("face_high", 0.91, 0.11),
];

impl<F: Real> ScenarioRegistry<F> {
    /// Registry holding exactly the six built-in presets.
    pub fn builtin() -> Self {
        let mut entries = BTreeMap::new();
        for &(name, mu, sigma) in &BUILTIN_SCENARIOS {
            let meta = BetaMeanStd::new(real::<F>(mu), real::<F>(sigma))
                .expect("builtin presets are feasible");
            entries.insert(name.to_string(), AttackScenario::new(name, meta));
        }
        ScenarioRegistry { entries }
    }

    pub fn empty() -> Self {
        ScenarioRegistry {
            entries: BTreeMap::new(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&AttackScenario<F>> {
        self.entries.get(name)
    }

    pub fn insert(&mut self, scenario: AttackScenario<F>) {
        self.entries.insert(scenario.name().to_string(), scenario);
    }

    pub fn merge(&mut self, other: ScenarioRegistry<F>) {
        self.entries.extend(other.entries);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &AttackScenario<F>> {
        self.entries.values()
    }

    /// Serialize as a JSON list of `{name, mu, sigma}` objects.
    pub fn to_json(&self) -> Result<String>
    where
        F: Serialize,
    {
        let list: Vec<&AttackScenario<F>> = self.entries.values().collect();
        Ok(serde_json::to_string_pretty(&list)?)
    }

    /// Parse a JSON list of `{name, mu, sigma}` objects.
    pub fn from_json(text: &str) -> Result<Self>
    where
        F: for<'de> Deserialize<'de>,
    {
        let list: Vec<AttackScenario<F>> = serde_json::from_str(text)?;
        let mut registry = ScenarioRegistry::empty();
        for scenario in list {
            registry.insert(scenario);
        }
        Ok(registry)
    }
}
