//! Fictitious fake-score generation and dataset rewriting.
//!
//! A fake score is `alpha * g + (1 - alpha) * i` with `alpha` drawn from the
//! scenario's Beta distribution and `g`, `i` resampled with replacement from
//! the per-matcher genuine and impostor pools (the empirical distributions,
//! no smoothing). Every replaced score uses fresh `(alpha, g, i)` draws from
//! a substream keyed by (sample index, matcher index), so rewriting is
//! order-independent and safe to parallelize.

use std::collections::BTreeMap;

use rand::Rng;

use crate::attack::{AttackCombination, MixturePrior};
use crate::beta::{draw_alpha, AttackScenario, BetaMeanStd};
use crate::data::{Label, ScoreDataset};
use crate::error::{Error, Result};
use crate::rng::{domain, substream};
use crate::scalar::{real, Real};

/// Scenario lookup for `(matcher index, attack level)` pairs.
pub type ScenarioAssignment<F> = BTreeMap<(usize, u32), AttackScenario<F>>;

/// An attack combination together with the scenario simulated on each
/// attacked matcher.
#[derive(Debug, Clone, PartialEq)]
pub struct SpoofPlan<F> {
    combination: AttackCombination,
    scenarios: BTreeMap<usize, AttackScenario<F>>,
}

impl<F: Real> SpoofPlan<F> {
    /// Every attacked matcher must have exactly one scenario; unattacked
    /// matchers must have none.
    pub fn new(
        combination: AttackCombination,
        scenarios: BTreeMap<usize, AttackScenario<F>>,
    ) -> Result<Self> {
        for (matcher, level) in combination.attacked() {
            if !scenarios.contains_key(&matcher) {
                return Err(Error::MissingScenario { matcher, level });
            }
        }
        for matcher in scenarios.keys() {
            if combination.levels().get(*matcher).copied().unwrap_or(0) == 0 {
                return Err(Error::BadSpoofPlan {
                    message: format!("scenario given for unattacked matcher {matcher}"),
                });
            }
        }
        Ok(SpoofPlan {
            combination,
            scenarios,
        })
    }

    /// Resolve a plan from a shared `(matcher, level) -> scenario` assignment.
    pub fn from_assignment(
        combination: AttackCombination,
        assignment: &ScenarioAssignment<F>,
    ) -> Result<Self> {
        let mut scenarios = BTreeMap::new();
        for (matcher, level) in combination.attacked() {
            let scenario = assignment
                .get(&(matcher, level))
                .ok_or(Error::MissingScenario { matcher, level })?;
            scenarios.insert(matcher, scenario.clone());
        }
        SpoofPlan::new(combination, scenarios)
    }

    pub fn combination(&self) -> &AttackCombination {
        &self.combination
    }

    pub fn scenarios(&self) -> &BTreeMap<usize, AttackScenario<F>> {
        &self.scenarios
    }
}

fn draw_fake<F: Real>(
    genuine_pool: &[F],
    impostor_pool: &[F],
    ms: &BetaMeanStd<F>,
    rng: &mut impl Rng,
) -> F {
    let alpha: F = draw_alpha(&ms.shape(), rng);
    let g = genuine_pool[rng.gen_range(0..genuine_pool.len())];
    let i = impostor_pool[rng.gen_range(0..impostor_pool.len())];
    alpha * g + (F::one() - alpha) * i
}

/// Draw `n` fictitious fake scores from the mixing model.
pub fn sample_fake_scores<F: Real>(
    genuine_pool: &[F],
    impostor_pool: &[F],
    ms: &BetaMeanStd<F>,
    n: usize,
    seed: u64,
) -> Result<Vec<F>> {
    if genuine_pool.is_empty() {
        return Err(Error::PoolTooSmall {
            name: "genuine",
            min: 1,
            found: 0,
        });
    }
    if impostor_pool.is_empty() {
        return Err(Error::PoolTooSmall {
            name: "impostor",
            min: 1,
            found: 0,
        });
    }
    Ok((0..n)
        .map(|j| {
            let mut rng = substream(seed, &[domain::FAKE_SCORES, j as u64]);
            draw_fake(genuine_pool, impostor_pool, ms, &mut rng)
        })
        .collect())
}

fn pools_by_matcher<F: Real>(dataset: &ScoreDataset<F>) -> (Vec<Vec<F>>, Vec<Vec<F>>) {
    let k = dataset.n_matchers();
    let mut genuine = vec![Vec::new(); k];
    let mut impostor = vec![Vec::new(); k];
    for sample in dataset.samples() {
        let target = match sample.label {
            Label::Genuine => &mut genuine,
            Label::Impostor => &mut impostor,
        };
        for (m, &s) in sample.scores.iter().enumerate() {
            target[m].push(s);
        }
    }
    (genuine, impostor)
}

/// Rewrite the impostor rows of `dataset` according to `plan`.
///
/// Genuine rows are returned bit-identical. For each impostor row and each
/// attacked matcher, the score is replaced by a fake draw whose pools come
/// from the input dataset itself. Rewritten rows are tagged with the plan's
/// combination (the all-zero combination rewrites nothing and returns the
/// input unchanged).
pub fn spoof_dataset<F: Real>(
    dataset: &ScoreDataset<F>,
    plan: &SpoofPlan<F>,
    seed: u64,
) -> Result<ScoreDataset<F>> {
    let k = dataset.n_matchers();
    if plan.combination.n_matchers() != k {
        return Err(Error::BadSpoofPlan {
            message: format!(
                "plan covers {} matchers but dataset has {k}",
                plan.combination.n_matchers()
            ),
        });
    }
    if plan.combination.is_zero_effort() {
        return Ok(dataset.clone());
    }
    dataset.validate()?;
    let (genuine_pools, impostor_pools) = pools_by_matcher(dataset);

    let mut out = dataset.clone();
    for (j, sample) in out.samples_mut().iter_mut().enumerate() {
        if sample.label != Label::Impostor {
            continue;
        }
        for (matcher, _) in plan.combination.attacked() {
            let scenario = &plan.scenarios[&matcher];
            let mut rng = substream(seed, &[domain::SPOOF, j as u64, matcher as u64]);
            sample.scores[matcher] = draw_fake(
                &genuine_pools[matcher],
                &impostor_pools[matcher],
                scenario.meta(),
                &mut rng,
            );
        }
        sample.provenance = Some(plan.combination.clone());
    }
    Ok(out)
}

/// Resample impostor rows under a mixture of attack combinations.
///
/// For each impostor row a combination is drawn from `prior`; the attacked
/// coordinates are then replaced per the matching scenario. Rows drawn under
/// the all-zero combination keep their original zero-effort scores.
pub fn resample_training_impostors<F: Real>(
    dataset: &ScoreDataset<F>,
    prior: &MixturePrior<F>,
    scenarios: &ScenarioAssignment<F>,
    seed: u64,
) -> Result<ScoreDataset<F>> {
    dataset.validate()?;
    let k = dataset.n_matchers();
    // fail fast if any combination with mass lacks a scenario
    for (combo, _) in prior.attack_support() {
        if combo.n_matchers() != k {
            return Err(Error::BadSpoofPlan {
                message: format!(
                    "prior combination {} covers {} matchers but dataset has {k}",
                    combo,
                    combo.n_matchers()
                ),
            });
        }
        for (matcher, level) in combo.attacked() {
            if !scenarios.contains_key(&(matcher, level)) {
                return Err(Error::MissingScenario { matcher, level });
            }
        }
    }
    let (genuine_pools, impostor_pools) = pools_by_matcher(dataset);

    let mut out = dataset.clone();
    for (j, sample) in out.samples_mut().iter_mut().enumerate() {
        if sample.label != Label::Impostor {
            continue;
        }
        let mut combo_rng = substream(seed, &[domain::RESAMPLE, j as u64]);
        let u: F = real(combo_rng.gen::<f64>());
        let combo = prior.draw(u).clone();
        for (matcher, level) in combo.attacked() {
            let scenario = &scenarios[&(matcher, level)];
            let mut rng = substream(seed, &[domain::RESAMPLE, j as u64, 1 + matcher as u64]);
            sample.scores[matcher] = draw_fake(
                &genuine_pools[matcher],
                &impostor_pools[matcher],
                scenario.meta(),
                &mut rng,
            );
        }
        if !combo.is_zero_effort() {
            sample.provenance = Some(combo);
        }
    }
    Ok(out)
}

/// Write a rewritten dataset as CSV plus a `<path>.plan.json` sidecar noting
/// the combination, scenarios and seed that produced it.
pub fn write_spoofed_csv<F: Real>(
    dataset: &ScoreDataset<F>,
    plan: &SpoofPlan<F>,
    seed: u64,
    path: impl AsRef<std::path::Path>,
) -> Result<()> {
    let path = path.as_ref();
    crate::data::write_scores_csv(dataset, path)?;
    let scenarios: Vec<serde_json::Value> = plan
        .scenarios
        .iter()
        .map(|(matcher, scenario)| {
            serde_json::json!({
                "matcher": matcher,
                "name": scenario.name(),
                "mu": crate::scalar::to_f64(scenario.meta().mu()),
                "sigma": crate::scalar::to_f64(scenario.meta().sigma()),
            })
        })
        .collect();
    let sidecar = serde_json::json!({
        "combination": plan.combination.levels(),
        "bounds": plan.combination.bounds(),
        "scenarios": scenarios,
        "seed": seed,
    });
    let sidecar_path = path.with_extension("plan.json");
    std::fs::write(
        &sidecar_path,
        serde_json::to_string_pretty(&sidecar).expect("plan serializes"),
    )
    .map_err(|source| Error::Io {
        path: sidecar_path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::enumerate_combinations;
    use crate::data::Sample;

    fn scenario(mu: f64, sigma: f64) -> AttackScenario<f64> {
        AttackScenario::new("test", BetaMeanStd::new(mu, sigma).unwrap())
    }

    fn dataset() -> ScoreDataset<f64> {
        let mut samples = Vec::new();
        for i in 0..40 {
            samples.push(Sample::new(
                format!("g{i}"),
                vec![0.7 + 0.005 * i as f64, 0.65 + 0.005 * i as f64],
                Label::Genuine,
            ));
            samples.push(Sample::new(
                format!("i{i}"),
                vec![0.1 + 0.004 * i as f64, 0.15 + 0.004 * i as f64],
                Label::Impostor,
            ));
        }
        ScoreDataset::new(2, samples)
    }

    #[test]
    fn zero_effort_plan_is_identity() {
        let ds = dataset();
        let combo = AttackCombination::zero(vec![1, 1]).unwrap();
        let plan = SpoofPlan::new(combo, BTreeMap::new()).unwrap();
        let out = spoof_dataset(&ds, &plan, 99).unwrap();
        assert_eq!(ds, out);
    }

    #[test]
    fn untouched_matcher_is_bit_identical() {
        let ds = dataset();
        let combo = AttackCombination::new(vec![1, 0], vec![1, 1]).unwrap();
        let plan = SpoofPlan::new(
            combo,
            [(0usize, scenario(0.4, 0.26))].into_iter().collect(),
        )
        .unwrap();
        let out = spoof_dataset(&ds, &plan, 7).unwrap();
        for (a, b) in ds.samples().iter().zip(out.samples()) {
            assert_eq!(a.scores[1], b.scores[1]);
            match a.label {
                Label::Genuine => assert_eq!(a, b),
                Label::Impostor => {
                    assert!(b.provenance.is_some());
                    assert_ne!(a.scores[0], b.scores[0]);
                }
            }
        }
    }

    #[test]
    fn rewriting_is_deterministic() {
        let ds = dataset();
        let combo = AttackCombination::new(vec![1, 1], vec![1, 1]).unwrap();
        let plan = SpoofPlan::new(
            combo,
            [(0usize, scenario(0.4, 0.26)), (1usize, scenario(0.91, 0.11))]
                .into_iter()
                .collect(),
        )
        .unwrap();
        let a = spoof_dataset(&ds, &plan, 7).unwrap();
        let b = spoof_dataset(&ds, &plan, 7).unwrap();
        assert_eq!(a, b);
        let c = spoof_dataset(&ds, &plan, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn fake_scores_stay_in_pool_hull() {
        let genuine: Vec<f64> = (0..50).map(|i| 0.6 + 0.006 * i as f64).collect();
        let impostor: Vec<f64> = (0..50).map(|i| 0.05 + 0.004 * i as f64).collect();
        let ms = BetaMeanStd::new(0.4, 0.26).unwrap();
        let fakes = sample_fake_scores(&genuine, &impostor, &ms, 5000, 3).unwrap();
        let lo = 0.05;
        let hi = 0.6 + 0.006 * 49.0;
        assert!(fakes.iter().all(|&x| x >= lo && x <= hi));
    }

    #[test]
    fn empty_pool_rejected() {
        let ms = BetaMeanStd::new(0.4, 0.26).unwrap();
        assert!(matches!(
            sample_fake_scores::<f64>(&[], &[0.1], &ms, 1, 0),
            Err(Error::PoolTooSmall { name: "genuine", .. })
        ));
        assert!(matches!(
            sample_fake_scores::<f64>(&[0.9], &[], &ms, 1, 0),
            Err(Error::PoolTooSmall { name: "impostor", .. })
        ));
    }

    #[test]
    fn plan_matcher_out_of_range_rejected() {
        let ds = dataset();
        let combo = AttackCombination::new(vec![0, 0, 1], vec![1, 1, 1]).unwrap();
        let plan = SpoofPlan::new(
            combo,
            [(2usize, scenario(0.4, 0.26))].into_iter().collect(),
        )
        .unwrap();
        assert!(matches!(
            spoof_dataset(&ds, &plan, 1),
            Err(Error::BadSpoofPlan { .. })
        ));
    }

    #[test]
    fn plan_requires_exact_scenario_coverage() {
        let combo = AttackCombination::new(vec![1, 0], vec![1, 1]).unwrap();
        assert!(matches!(
            SpoofPlan::<f64>::new(combo.clone(), BTreeMap::new()),
            Err(Error::MissingScenario { matcher: 0, level: 1 })
        ));
        let extra = SpoofPlan::new(
            combo,
            [(0usize, scenario(0.4, 0.26)), (1usize, scenario(0.4, 0.26))]
                .into_iter()
                .collect(),
        );
        assert!(matches!(extra, Err(Error::BadSpoofPlan { .. })));
    }

    #[test]
    fn resample_with_zero_mass_prior_is_identity_on_scores() {
        let ds = dataset();
        let prior = MixturePrior::zero_effort(vec![1, 1]).unwrap();
        let out = resample_training_impostors(&ds, &prior, &BTreeMap::new(), 5).unwrap();
        assert_eq!(ds, out);
    }

    #[test]
    fn resample_missing_scenario_rejected() {
        let ds = dataset();
        let combos = enumerate_combinations(&[1, 1]).unwrap();
        let prior = MixturePrior::from_pairs(
            combos
                .iter()
                .map(|c| (c.clone(), if c.is_zero_effort() { 0.5 } else { 0.5 / 3.0 }))
                .collect(),
        )
        .unwrap();
        let mut scenarios = ScenarioAssignment::new();
        scenarios.insert((0, 1), scenario(0.4, 0.26));
        assert!(matches!(
            resample_training_impostors(&ds, &prior, &scenarios, 5),
            Err(Error::MissingScenario { matcher: 1, level: 1 })
        ));
    }
}
