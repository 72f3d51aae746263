//! Attack-aware likelihood-ratio rules.
//!
//! The impostor density becomes a mixture over attack combinations: per
//! combination, each matcher contributes either its zero-effort impostor
//! density (when not attacked) or a hypothesized fake-score density. Three
//! fake-density assumptions are supported:
//!
//! * extended — the fake density equals the genuine density (worst-case
//!   assumption);
//! * uniform — constant 1 on [0, 1], used when nothing is known about the
//!   attack;
//! * alpha — fitted to scores simulated from the mixing meta-model under a
//!   configured (typically high-impact) attack scenario.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::attack::{enumerate_combinations, AttackCombination, MixturePrior};
use crate::data::{Label, ScoreDataset};
use crate::error::{Error, Result};
use crate::fusion::gamma::{fit_gamma, log_floor, GammaFit};
use crate::fusion::llr::{train_llr, LlrModel};
use crate::rng::{domain, mix};
use crate::scalar::{real, to_f64, Real};
use crate::sim::{sample_fake_scores, ScenarioAssignment};

/// Gaussian kernel density estimate over a subsample of simulated scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianKde<F> {
    pub points: Vec<F>,
    pub bandwidth: F,
}

impl<F: Real> GaussianKde<F> {
    /// Silverman's rule on the given sample, keeping at most `max_points`
    /// evenly-strided support points.
    pub fn fit(sample: &[F], max_points: usize) -> Result<Self> {
        if sample.len() < 2 {
            return Err(Error::PoolTooSmall {
                name: "kde sample",
                min: 2,
                found: sample.len(),
            });
        }
        let n = real::<F>(sample.len() as f64);
        let mean = sample.iter().copied().sum::<F>() / n;
        let var = sample
            .iter()
            .map(|&x| {
                let d = x - mean;
                d * d
            })
            .sum::<F>()
            / (n - F::one());
        let std = var.sqrt();
        let mut sorted = sample.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
        let q = |p: f64| sorted[((p * (sorted.len() - 1) as f64).round()) as usize];
        let iqr = q(0.75) - q(0.25);
        let spread = if iqr > F::zero() {
            std.min(iqr / real(1.34))
        } else {
            std
        };
        let bandwidth = (real::<F>(0.9) * spread
            * real::<F>((sample.len() as f64).powf(-0.2)))
        .max(real(1e-6));
        let stride = (sorted.len() / max_points).max(1);
        let points: Vec<F> = sorted.iter().step_by(stride).copied().collect();
        Ok(GaussianKde { points, bandwidth })
    }

    pub fn log_density(&self, x: F) -> F {
        let h = self.bandwidth;
        let norm = real::<F>((2.0 * std::f64::consts::PI).sqrt())
            * h
            * real::<F>(self.points.len() as f64);
        let mut max_term = F::neg_infinity();
        let half = real::<F>(0.5);
        let terms: Vec<F> = self
            .points
            .iter()
            .map(|&p| {
                let z = (x - p) / h;
                let t = -half * z * z;
                max_term = max_term.max(t);
                t
            })
            .collect();
        if !max_term.is_finite() {
            return log_floor();
        }
        let sum: F = terms.iter().map(|&t| (t - max_term).exp()).sum();
        (max_term + sum.ln() - norm.ln()).max(log_floor())
    }
}

/// Hypothesized fake-score density of one attacked matcher.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FakeDensity<F> {
    /// Fake scores distributed as genuine scores (worst case).
    SameAsGenuine,
    /// Uniform on [0, 1].
    Uniform01,
    /// Gamma fit to scores simulated from the mixing model.
    Gamma { fit: GammaFit<F> },
    /// Kernel density fit to scores simulated from the mixing model.
    Kde { kde: GaussianKde<F> },
}

impl<F: Real> FakeDensity<F> {
    fn log_pdf(&self, genuine: &GammaFit<F>, x: F) -> F {
        match self {
            FakeDensity::SameAsGenuine => genuine.log_pdf(x),
            FakeDensity::Uniform01 => {
                if x >= F::zero() && x <= F::one() {
                    F::zero()
                } else {
                    log_floor()
                }
            }
            FakeDensity::Gamma { fit } => fit.log_pdf(x),
            FakeDensity::Kde { kde } => kde.log_density(x),
        }
    }
}

/// Which secure LLR flavor to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecureVariant {
    Extended,
    Uniform,
    Alpha,
}

/// Density family used for the alpha variant's simulated fakes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DensityEstimator {
    #[default]
    Gamma,
    Kde,
}

/// Knobs of [`train_secure_llr`].
#[derive(Debug, Clone, Copy)]
pub struct SecureLlrOptions {
    /// Density family for simulated fake scores (alpha variant only).
    pub estimator: DensityEstimator,
    /// Number of simulated fake scores per attacked matcher.
    pub n_sim: usize,
    /// Seed for the fake-score simulation.
    pub seed: u64,
}

impl Default for SecureLlrOptions {
    fn default() -> Self {
        SecureLlrOptions {
            estimator: DensityEstimator::Gamma,
            n_sim: 100_000,
            seed: 0,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct FakeDensityEntry<F> {
    matcher: usize,
    level: u32,
    density: FakeDensity<F>,
}

/// LLR rule whose impostor model is a mixture over attack combinations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "F: Real + Serialize",
    deserialize = "F: Real + serde::de::DeserializeOwned"
))]
pub struct SecureLlrModel<F: Real> {
    pub base: LlrModel<F>,
    pub prior: MixturePrior<F>,
    #[serde(with = "fake_map")]
    pub fake: BTreeMap<(usize, u32), FakeDensity<F>>,
}

mod fake_map {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<F, S>(
        map: &BTreeMap<(usize, u32), FakeDensity<F>>,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error>
    where
        F: Real + Serialize,
        S: Serializer,
    {
        let entries: Vec<FakeDensityEntry<F>> = map
            .iter()
            .map(|(&(matcher, level), density)| FakeDensityEntry {
                matcher,
                level,
                density: density.clone(),
            })
            .collect();
        entries.serialize(serializer)
    }

    pub fn deserialize<'de, F, D>(
        deserializer: D,
    ) -> std::result::Result<BTreeMap<(usize, u32), FakeDensity<F>>, D::Error>
    where
        F: Real + serde::de::DeserializeOwned,
        D: Deserializer<'de>,
    {
        let entries: Vec<FakeDensityEntry<F>> = Vec::deserialize(deserializer)?;
        Ok(entries
            .into_iter()
            .map(|e| ((e.matcher, e.level), e.density))
            .collect())
    }
}

/// Prior over binary attack combinations derived from an attempt rate `r`
/// and per-matcher security levels `c_i`.
///
/// Generatively: with probability `1 - r` no attack is attempted; otherwise
/// one of the `2^K - 1` non-empty attempt subsets is chosen uniformly, and an
/// attempt against matcher `i` independently fails with probability `c_i`.
/// For `K = 2` this reduces to the closed forms
/// `p(1,0) = r/3 (1-c1)(1+c2)`, `p(0,1) = r/3 (1+c1)(1-c2)`,
/// `p(1,1) = r/3 (1-c1)(1-c2)`, `p(0,0) = r/3 (c1+c2+c1c2) + 1-r`.
pub fn extended_llr_prior<F: Real>(r: F, c: &[F]) -> Result<MixturePrior<F>> {
    let check = |context: &'static str, v: F| -> Result<()> {
        if v < F::zero() || v > F::one() || !v.is_finite() {
            return Err(Error::OutOfRange {
                context,
                value: to_f64(v),
                low: 0.0,
                high: 1.0,
            });
        }
        Ok(())
    };
    check("attempt rate r", r)?;
    for &ci in c {
        check("security level c_i", ci)?;
    }
    let k = c.len();
    if k == 0 || k > 20 {
        return Err(Error::Config {
            message: format!("extended prior needs 1..=20 matchers, got {k}"),
        });
    }

    let bounds = vec![1u32; k];
    let combos = enumerate_combinations(&bounds)?;
    let n_subsets = (1usize << k) - 1;
    let attempt_weight = r / real::<F>(n_subsets as f64);

    let mut weights: BTreeMap<AttackCombination, F> =
        combos.iter().map(|c| (c.clone(), F::zero())).collect();

    for t in 0..(1usize << k) {
        let p_t = if t == 0 { F::one() - r } else { attempt_weight };
        // distribute p(t) over outcomes a <= t
        for combo in &combos {
            let mut p = p_t;
            let mut possible = true;
            for (i, &a) in combo.levels().iter().enumerate() {
                let attempted = (t >> i) & 1 == 1;
                p = p * match (attempted, a != 0) {
                    (false, false) => F::one(),
                    (false, true) => {
                        possible = false;
                        break;
                    }
                    (true, false) => c[i],
                    (true, true) => F::one() - c[i],
                };
            }
            if possible {
                let w = weights.get_mut(combo).expect("combo enumerated");
                *w = *w + p;
            }
        }
    }
    MixturePrior::new(weights)
}

/// Train a secure LLR variant.
///
/// The base model is a plain LLR fit; the fake densities are set per variant.
/// The alpha variant requires a scenario for every `(matcher, level)` pair
/// carrying prior mass and simulates `options.n_sim` fake scores from the
/// training pools to fit each density.
pub fn train_secure_llr<F: Real>(
    dataset: &ScoreDataset<F>,
    prior: &MixturePrior<F>,
    variant: SecureVariant,
    scenarios: Option<&ScenarioAssignment<F>>,
    options: &SecureLlrOptions,
) -> Result<SecureLlrModel<F>> {
    let base = train_llr(dataset)?;
    let k = dataset.n_matchers();

    let mut needed: Vec<(usize, u32)> = Vec::new();
    for (combo, _) in prior.attack_support() {
        if combo.n_matchers() != k {
            return Err(Error::BadSpoofPlan {
                message: format!(
                    "prior combination {combo} covers {} matchers but dataset has {k}",
                    combo.n_matchers()
                ),
            });
        }
        for pair in combo.attacked() {
            if !needed.contains(&pair) {
                needed.push(pair);
            }
        }
    }
    needed.sort_unstable();

    let mut fake = BTreeMap::new();
    for (matcher, level) in needed {
        let density = match variant {
            SecureVariant::Extended => FakeDensity::SameAsGenuine,
            SecureVariant::Uniform => FakeDensity::Uniform01,
            SecureVariant::Alpha => {
                let assignment = scenarios.ok_or(Error::Config {
                    message: "alpha variant requires attack scenarios".to_string(),
                })?;
                let scenario = assignment
                    .get(&(matcher, level))
                    .ok_or(Error::MissingScenario { matcher, level })?;
                let genuine = dataset.class_scores(matcher, Label::Genuine);
                let impostor = dataset.class_scores(matcher, Label::Impostor);
                let seed = mix(
                    options.seed,
                    &[domain::ALPHA_DENSITY, matcher as u64, level as u64],
                );
                let fakes =
                    sample_fake_scores(&genuine, &impostor, scenario.meta(), options.n_sim, seed)?;
                match options.estimator {
                    DensityEstimator::Gamma => FakeDensity::Gamma {
                        fit: fit_gamma(&fakes)?,
                    },
                    DensityEstimator::Kde => FakeDensity::Kde {
                        kde: GaussianKde::fit(&fakes, 1024)?,
                    },
                }
            }
        };
        fake.insert((matcher, level), density);
    }

    Ok(SecureLlrModel {
        base,
        prior: prior.clone(),
        fake,
    })
}

/// Fused score of the mixture-impostor LLR:
/// `log p(s|G) - log sum_a pi_a prod_i d_i(s_i; a_i)`.
pub fn fuse_secure_llr<F: Real>(model: &SecureLlrModel<F>, s: &[F]) -> F {
    let log_genuine = model.base.log_genuine(s);

    let mut terms: Vec<F> = Vec::with_capacity(model.prior.weights().len());
    let mut max_term = F::neg_infinity();
    for (combo, &weight) in model.prior.weights() {
        if weight <= F::zero() {
            continue;
        }
        let mut term = weight.ln();
        for (i, &a) in combo.levels().iter().enumerate() {
            let component = &model.base.matchers[i];
            term = term + if a == 0 {
                component.impostor.log_pdf(s[i])
            } else {
                model.fake[&(i, a)].log_pdf(&component.genuine, s[i])
            };
        }
        max_term = max_term.max(term);
        terms.push(term);
    }

    // log-sum-exp; a single term comes back exactly (exp(0) = 1, ln 1 = 0)
    let log_impostor = if terms.is_empty() {
        log_floor()
    } else {
        let sum: F = terms.iter().map(|&t| (t - max_term).exp()).sum();
        max_term + sum.ln()
    };
    log_genuine - log_impostor
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Sample;
    use crate::fusion::llr::fuse_llr;

    fn dataset() -> ScoreDataset<f64> {
        let mut samples = Vec::new();
        for i in 0..80 {
            let t = i as f64 / 80.0;
            samples.push(Sample::new(
                format!("g{i}"),
                vec![0.55 + 0.4 * t, 0.5 + 0.45 * t],
                Label::Genuine,
            ));
            samples.push(Sample::new(
                format!("i{i}"),
                vec![0.02 + 0.3 * t, 0.05 + 0.35 * t],
                Label::Impostor,
            ));
        }
        ScoreDataset::new(2, samples)
    }

    fn paper_prior() -> MixturePrior<f64> {
        let combos = enumerate_combinations(&[1, 1]).unwrap();
        MixturePrior::from_pairs(vec![
            (combos[0].clone(), 0.5),  // (0,0)
            (combos[1].clone(), 0.25), // (0,1)
            (combos[2].clone(), 0.25), // (1,0)
            (combos[3].clone(), 0.0),  // (1,1)
        ])
        .unwrap()
    }

    #[test]
    fn extended_prior_closed_forms() {
        let prior = extended_llr_prior(0.3f64, &[0.5, 0.5]).unwrap();
        let combos = enumerate_combinations(&[1, 1]).unwrap();
        let w = |levels: &[u32]| {
            let c = combos.iter().find(|c| c.levels() == levels).unwrap();
            prior.weight(c).unwrap()
        };
        assert!((w(&[1, 0]) - 0.075).abs() < 1e-12);
        assert!((w(&[0, 1]) - 0.075).abs() < 1e-12);
        assert!((w(&[1, 1]) - 0.025).abs() < 1e-12);
        assert!((w(&[0, 0]) - 0.825).abs() < 1e-12);
    }

    #[test]
    fn extended_prior_r_zero_is_zero_effort() {
        let prior = extended_llr_prior(0.0f64, &[0.3, 0.9]).unwrap();
        assert_eq!(prior.zero_effort_weight(), 1.0);
        assert_eq!(prior.attack_support().count(), 0);
    }

    #[test]
    fn extended_prior_r_one_no_security() {
        let prior = extended_llr_prior(1.0f64, &[0.0, 0.0]).unwrap();
        let combos = enumerate_combinations(&[1, 1]).unwrap();
        for combo in &combos {
            let w = prior.weight(combo).unwrap();
            if combo.is_zero_effort() {
                assert!(w.abs() < 1e-12);
            } else {
                assert!((w - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn extended_prior_rejects_out_of_range() {
        assert!(extended_llr_prior(1.2f64, &[0.5]).is_err());
        assert!(extended_llr_prior(0.5f64, &[-0.1]).is_err());
        assert!(extended_llr_prior::<f64>(0.5, &[]).is_err());
    }

    #[test]
    fn zero_attack_prior_collapses_to_plain_llr() {
        let ds = dataset();
        let prior = MixturePrior::zero_effort(vec![1, 1]).unwrap();
        let llr = train_llr(&ds).unwrap();
        for variant in [SecureVariant::Extended, SecureVariant::Uniform] {
            let model =
                train_secure_llr(&ds, &prior, variant, None, &SecureLlrOptions::default())
                    .unwrap();
            for i in 0..50 {
                let s = [0.02 * i as f64, 1.0 - 0.015 * i as f64];
                let a = fuse_secure_llr(&model, &s);
                let b = fuse_llr(&llr, &s);
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn extended_all_attacked_gives_zero_log_ratio() {
        let ds = dataset();
        let combos = enumerate_combinations(&[1, 1]).unwrap();
        let prior = MixturePrior::from_pairs(vec![
            (combos[0].clone(), 0.0),
            (combos[1].clone(), 0.0),
            (combos[2].clone(), 0.0),
            (combos[3].clone(), 1.0),
        ])
        .unwrap();
        let model = train_secure_llr(
            &ds,
            &prior,
            SecureVariant::Extended,
            None,
            &SecureLlrOptions::default(),
        )
        .unwrap();
        for i in 0..20 {
            let s = [0.05 * i as f64, 0.9 - 0.04 * i as f64];
            assert!(fuse_secure_llr(&model, &s).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_variant_mixture_denominator() {
        // K=1, prior {0: 0.5, 1: 0.5}: denominator is the average of the
        // impostor density and 1
        let mut samples = Vec::new();
        for i in 0..50 {
            let t = i as f64 / 50.0;
            samples.push(Sample::new(format!("g{i}"), vec![0.6 + 0.35 * t], Label::Genuine));
            samples.push(Sample::new(format!("i{i}"), vec![0.05 + 0.3 * t], Label::Impostor));
        }
        let ds = ScoreDataset::new(1, samples);
        let combos = enumerate_combinations(&[1]).unwrap();
        let prior = MixturePrior::from_pairs(vec![
            (combos[0].clone(), 0.5),
            (combos[1].clone(), 0.5),
        ])
        .unwrap();
        let model = train_secure_llr(
            &ds,
            &prior,
            SecureVariant::Uniform,
            None,
            &SecureLlrOptions::default(),
        )
        .unwrap();
        for &x in &[0.1, 0.3, 0.55, 0.9] {
            let got = fuse_secure_llr(&model, &[x]);
            let pg = model.base.matchers[0].genuine.log_pdf(x).exp();
            let pi = model.base.matchers[0].impostor.log_pdf(x).exp();
            let want = pg.ln() - (0.5 * pi + 0.5).ln();
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn alpha_variant_requires_scenarios() {
        let ds = dataset();
        let prior = paper_prior();
        let err = train_secure_llr(
            &ds,
            &prior,
            SecureVariant::Alpha,
            None,
            &SecureLlrOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }

    #[test]
    fn model_json_round_trip() {
        use crate::beta::{AttackScenario, BetaMeanStd};
        let ds = dataset();
        let prior = paper_prior();
        let mut scenarios = ScenarioAssignment::new();
        scenarios.insert(
            (0, 1),
            AttackScenario::new("m0", BetaMeanStd::new(0.4, 0.26).unwrap()),
        );
        scenarios.insert(
            (1, 1),
            AttackScenario::new("m1", BetaMeanStd::new(0.91, 0.11).unwrap()),
        );
        let options = SecureLlrOptions {
            n_sim: 2000,
            ..SecureLlrOptions::default()
        };
        let model =
            train_secure_llr(&ds, &prior, SecureVariant::Alpha, Some(&scenarios), &options)
                .unwrap();
        let json = serde_json::to_string(&model).unwrap();
        let back: SecureLlrModel<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(model, back);
        let s = [0.4, 0.6];
        assert_eq!(fuse_secure_llr(&model, &s), fuse_secure_llr(&back, &s));
    }
}
