//! Experiment configuration: a single JSON document describing the data
//! source, attack mixture, rules under evaluation, splits and seeds.

use serde::{Deserialize, Serialize};

use crate::attack::{enumerate_combinations, AttackCombination, MixturePrior};
use crate::beta::{AttackScenario, BetaMeanStd, BetaShape, ScenarioRegistry};
use crate::error::{Error, Result};
use crate::fusion::{extended_llr_prior, DensityEstimator, RuleKind};
use crate::metrics::BandMethod;
use crate::scalar::{real, to_f64, Real};
use crate::sim::ScenarioAssignment;

/// Default master seed used when none is given, for reproducible runs.
pub const DEFAULT_SEED: u64 = 42;

/// Client-level split specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec<F> {
    pub train_fraction: F,
    pub n_pairings: usize,
    pub n_splits: usize,
}

impl<F: Real> Default for SplitSpec<F> {
    fn default() -> Self {
        SplitSpec {
            train_fraction: real(0.4),
            n_pairings: 5,
            n_splits: 5,
        }
    }
}

/// Hyperparameter grids for the kernel rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmGridSpec<F> {
    pub c_grid: Vec<F>,
    pub gamma_grid: Vec<F>,
    pub folds: usize,
}

impl<F: Real> Default for SvmGridSpec<F> {
    fn default() -> Self {
        SvmGridSpec {
            c_grid: [0.001, 0.01, 0.1, 1.0, 10.0, 100.0]
                .iter()
                .map(|&x| real(x))
                .collect(),
            gamma_grid: [0.01, 0.1, 1.0, 10.0, 100.0]
                .iter()
                .map(|&x| real(x))
                .collect(),
            folds: 5,
        }
    }
}

/// Per-matcher class-conditional Beta shapes for synthetic score generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatcherSpec<F> {
    pub genuine: BetaShape<F>,
    pub impostor: BetaShape<F>,
}

/// Synthetic dataset: per-matcher score distributions and per-client claim
/// counts. Enables desk-scale experiments without any real score files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec<F> {
    pub matchers: Vec<MatcherSpec<F>>,
    pub n_clients: usize,
    pub genuine_claims: usize,
    pub impostor_claims: usize,
}

impl<F: Real> Default for SyntheticSpec<F> {
    fn default() -> Self {
        let genuine = BetaShape {
            p: real(8.0),
            q: real(2.0),
        };
        let impostor = BetaShape {
            p: real(2.0),
            q: real(8.0),
        };
        SyntheticSpec {
            matchers: vec![MatcherSpec { genuine, impostor }; 2],
            n_clients: 500,
            genuine_claims: 4,
            impostor_claims: 4,
        }
    }
}

impl<F: Real> SyntheticSpec<F> {
    /// Separability convention: genuine mean above impostor mean per matcher.
    pub fn validate(&self) -> Result<()> {
        if self.matchers.is_empty() {
            return Err(Error::Config {
                message: "synthetic spec needs at least one matcher".to_string(),
            });
        }
        for (m, spec) in self.matchers.iter().enumerate() {
            BetaShape::new(spec.genuine.p, spec.genuine.q)?;
            BetaShape::new(spec.impostor.p, spec.impostor.q)?;
            if spec.genuine.mean() <= spec.impostor.mean() {
                return Err(Error::Config {
                    message: format!(
                        "matcher {m}: genuine mean must exceed impostor mean"
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Prior specification: direct weights, or the attempt-rate form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PriorConfig<F> {
    Extended { r: F, c: Vec<F> },
    Direct(Vec<PriorWeight<F>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorWeight<F> {
    pub levels: Vec<u32>,
    pub weight: F,
}

/// A scenario by registry name or inline parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioRef<F> {
    Name(String),
    Params { mu: F, sigma: F },
}

/// Binding of a scenario to a `(matcher, level)` slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioBinding<F> {
    pub matcher: usize,
    #[serde(default = "default_level")]
    pub level: u32,
    pub scenario: ScenarioRef<F>,
}

fn default_level() -> u32 {
    1
}

/// Band construction knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BandConfig {
    pub method: BandMethod,
    /// Include the named scenarios and both limit cases in the curve family.
    pub include_known: bool,
}

impl Default for BandConfig {
    fn default() -> Self {
        BandConfig {
            method: BandMethod::MinMax,
            include_known: true,
        }
    }
}

/// Full experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[serde(bound(
    serialize = "F: Real + Serialize",
    deserialize = "F: Real + serde::de::DeserializeOwned"
))]
pub struct ExperimentConfig<F: Real> {
    pub seed: u64,
    pub frr_max: F,
    pub rules: Vec<RuleKind>,
    /// Attacks available per matcher (`u_i`).
    pub bounds: Vec<u32>,
    pub prior: PriorConfig<F>,
    pub scenarios: Vec<ScenarioBinding<F>>,
    /// Combinations to report SFAR for; defaults to the prior's support.
    pub combinations: Option<Vec<Vec<u32>>>,
    pub split: SplitSpec<F>,
    pub synthetic: Option<SyntheticSpec<F>>,
    pub svm: SvmGridSpec<F>,
    /// Number of uncertainty-grid scenarios per matcher for bands.
    pub grid_n: usize,
    /// Fix thresholds on training-set genuine scores instead of test-set.
    pub threshold_on_train: bool,
    pub band: BandConfig,
    /// Density family for the alpha rule's simulated fakes.
    pub estimator: DensityEstimator,
    /// Simulated fake scores per attacked matcher for the alpha rule.
    pub alpha_sim_n: usize,
}

impl<F: Real> Default for ExperimentConfig<F> {
    fn default() -> Self {
        ExperimentConfig {
            seed: DEFAULT_SEED,
            frr_max: real(0.02),
            rules: RuleKind::ALL.to_vec(),
            bounds: vec![1, 1],
            prior: PriorConfig::Direct(vec![
                PriorWeight { levels: vec![0, 0], weight: real(0.5) },
                PriorWeight { levels: vec![1, 0], weight: real(0.25) },
                PriorWeight { levels: vec![0, 1], weight: real(0.25) },
                PriorWeight { levels: vec![1, 1], weight: real(0.0) },
            ]),
            scenarios: vec![
                ScenarioBinding {
                    matcher: 0,
                    level: 1,
                    scenario: ScenarioRef::Name("fingerprint_high".to_string()),
                },
                ScenarioBinding {
                    matcher: 1,
                    level: 1,
                    scenario: ScenarioRef::Name("face_high".to_string()),
                },
            ],
            combinations: None,
            split: SplitSpec::default(),
            synthetic: Some(SyntheticSpec::default()),
            svm: SvmGridSpec::default(),
            grid_n: 400,
            threshold_on_train: false,
            band: BandConfig::default(),
            estimator: DensityEstimator::Gamma,
            alpha_sim_n: 100_000,
        }
    }
}

/// Config with priors, scenarios and combinations resolved into core types.
#[derive(Debug, Clone)]
pub struct ResolvedExperiment<F> {
    pub prior: MixturePrior<F>,
    pub assignment: ScenarioAssignment<F>,
    pub combinations: Vec<AttackCombination>,
}

impl<F: Real> ExperimentConfig<F> {
    pub fn from_json(text: &str) -> Result<Self>
    where
        F: serde::de::DeserializeOwned,
    {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String>
    where
        F: Serialize,
    {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Resolve priors, scenario bindings and combinations against a registry.
    pub fn resolve(&self, registry: &ScenarioRegistry<F>) -> Result<ResolvedExperiment<F>> {
        if self.frr_max < F::zero() || self.frr_max >= F::one() {
            return Err(Error::OutOfRange {
                context: "frr_max",
                value: to_f64(self.frr_max),
                low: 0.0,
                high: 1.0,
            });
        }
        let train_fraction = self.split.train_fraction;
        if train_fraction <= F::zero() || train_fraction >= F::one() {
            return Err(Error::OutOfRange {
                context: "train_fraction",
                value: to_f64(train_fraction),
                low: 0.0,
                high: 1.0,
            });
        }
        if self.rules.is_empty() {
            return Err(Error::Config {
                message: "no rules configured".to_string(),
            });
        }
        if let Some(spec) = &self.synthetic {
            spec.validate()?;
        }

        let combos = enumerate_combinations(&self.bounds)?;
        let prior = match &self.prior {
            PriorConfig::Extended { r, c } => {
                if c.len() != self.bounds.len() {
                    return Err(Error::Config {
                        message: format!(
                            "extended prior has {} security levels for {} matchers",
                            c.len(),
                            self.bounds.len()
                        ),
                    });
                }
                if self.bounds.iter().any(|&u| u != 1) {
                    return Err(Error::Config {
                        message: "extended prior requires binary bounds (u_i = 1)".to_string(),
                    });
                }
                extended_llr_prior(*r, c)?
            }
            PriorConfig::Direct(weights) => {
                let pairs = weights
                    .iter()
                    .map(|w| {
                        AttackCombination::new(w.levels.clone(), self.bounds.clone())
                            .map(|combo| (combo, w.weight))
                    })
                    .collect::<Result<Vec<_>>>()?;
                crate::attack::validate_prior(MixturePrior::from_pairs(pairs)?, &combos)?
            }
        };

        let mut assignment = ScenarioAssignment::new();
        for binding in &self.scenarios {
            if binding.matcher >= self.bounds.len() {
                return Err(Error::Config {
                    message: format!(
                        "scenario bound to matcher {} but only {} matchers configured",
                        binding.matcher,
                        self.bounds.len()
                    ),
                });
            }
            if binding.level == 0 || binding.level > self.bounds[binding.matcher] {
                return Err(Error::Config {
                    message: format!(
                        "scenario level {} out of range for matcher {}",
                        binding.level, binding.matcher
                    ),
                });
            }
            let scenario = match &binding.scenario {
                ScenarioRef::Name(name) => registry
                    .get(name)
                    .cloned()
                    .ok_or_else(|| Error::Config {
                        message: format!("unknown scenario '{name}'"),
                    })?,
                ScenarioRef::Params { mu, sigma } => {
                    let meta = BetaMeanStd::new(*mu, *sigma)?;
                    AttackScenario::new(
                        format!("m{}l{}", binding.matcher, binding.level),
                        meta,
                    )
                }
            };
            assignment.insert((binding.matcher, binding.level), scenario);
        }

        let combinations = match &self.combinations {
            Some(list) => list
                .iter()
                .map(|levels| AttackCombination::new(levels.clone(), self.bounds.clone()))
                .collect::<Result<Vec<_>>>()?,
            None => prior.attack_support().map(|(c, _)| c.clone()).collect(),
        };
        // every reported combination must have scenarios for its attacks
        for combo in &combinations {
            for (matcher, level) in combo.attacked() {
                if !assignment.contains_key(&(matcher, level)) {
                    return Err(Error::MissingScenario { matcher, level });
                }
            }
        }

        Ok(ResolvedExperiment {
            prior,
            assignment,
            combinations,
        })
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String
    where
        F: Serialize,
    {
        use sha2::{Digest, Sha256};
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(16);
        for byte in digest.iter().take(8) {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_resolves() {
        let config = ExperimentConfig::<f64>::default();
        let resolved = config.resolve(&ScenarioRegistry::builtin()).unwrap();
        assert_eq!(resolved.combinations.len(), 2);
        assert_eq!(resolved.assignment.len(), 2);
        assert!((to_f64(resolved.prior.zero_effort_weight()) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn config_json_round_trip_and_hash_stability() {
        let config = ExperimentConfig::<f64>::default();
        let json = config.to_json().unwrap();
        let back = ExperimentConfig::<f64>::from_json(&json).unwrap();
        assert_eq!(config, back);
        assert_eq!(config.hash(), back.hash());
        // minimal config parses through defaults
        let minimal = ExperimentConfig::<f64>::from_json("{}").unwrap();
        assert_eq!(minimal, config);
    }

    #[test]
    fn extended_prior_config() {
        let mut config = ExperimentConfig::<f64>::default();
        config.prior = PriorConfig::Extended {
            r: 0.3,
            c: vec![0.5, 0.5],
        };
        let resolved = config.resolve(&ScenarioRegistry::builtin()).unwrap();
        assert!((to_f64(resolved.prior.zero_effort_weight()) - 0.825).abs() < 1e-12);
    }

    #[test]
    fn unknown_scenario_name_rejected() {
        let mut config = ExperimentConfig::<f64>::default();
        config.scenarios[0].scenario = ScenarioRef::Name("iris_high".to_string());
        let err = config.resolve(&ScenarioRegistry::builtin()).unwrap_err();
        assert!(err.to_string().contains("iris_high"));
    }

    #[test]
    fn missing_scenario_for_combination_rejected() {
        let mut config = ExperimentConfig::<f64>::default();
        config.scenarios.pop();
        let err = config.resolve(&ScenarioRegistry::builtin()).unwrap_err();
        assert!(matches!(err, Error::MissingScenario { matcher: 1, level: 1 }));
    }

    #[test]
    fn synthetic_spec_separability_enforced() {
        let mut config = ExperimentConfig::<f64>::default();
        if let Some(spec) = config.synthetic.as_mut() {
            let swap = spec.matchers[0].genuine;
            spec.matchers[0].genuine = spec.matchers[0].impostor;
            spec.matchers[0].impostor = swap;
        }
        assert!(config.resolve(&ScenarioRegistry::builtin()).is_err());
    }
}
