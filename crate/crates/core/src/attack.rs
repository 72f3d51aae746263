//! Attack combinations and mixture priors over them.
//!
//! A combination records, per matcher, which of the `u_i` available attack
//! levels is in effect (`0` = not attacked). The all-zero combination is the
//! zero-effort case. A [`MixturePrior`] assigns a probability to every
//! combination; its weight on the all-zero combination is the zero-effort
//! prior and the remaining mass covers spoof impostors.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{to_f64, Real};

/// Tolerance on the prior normalization check.
pub const PRIOR_SUM_TOLERANCE: f64 = 1e-9;

/// Which matchers are attacked, and with which attack level.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AttackCombination {
    levels: Vec<u32>,
    bounds: Vec<u32>,
}

impl AttackCombination {
    pub fn new(levels: Vec<u32>, bounds: Vec<u32>) -> Result<Self> {
        if bounds.is_empty() || bounds.iter().any(|&u| u == 0) {
            return Err(Error::BadAttackBounds);
        }
        if levels.len() != bounds.len() {
            return Err(Error::AttackArityMismatch {
                levels: levels.len(),
                bounds: bounds.len(),
            });
        }
        for (matcher, (&a, &u)) in levels.iter().zip(&bounds).enumerate() {
            if a > u {
                return Err(Error::AttackLevelOutOfRange {
                    matcher,
                    level: a,
                    bound: u,
                });
            }
        }
        Ok(AttackCombination { levels, bounds })
    }

    /// The zero-effort combination for the given bounds.
    pub fn zero(bounds: Vec<u32>) -> Result<Self> {
        let levels = vec![0; bounds.len()];
        AttackCombination::new(levels, bounds)
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn bounds(&self) -> &[u32] {
        &self.bounds
    }

    pub fn n_matchers(&self) -> usize {
        self.levels.len()
    }

    pub fn is_zero_effort(&self) -> bool {
        self.levels.iter().all(|&a| a == 0)
    }

    /// Indices and levels of the attacked matchers.
    pub fn attacked(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.levels
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0)
            .map(|(i, &a)| (i, a))
    }

    /// Stable text form used as a map key in reports, e.g. `"1,0"`.
    pub fn label(&self) -> String {
        self.levels
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl fmt::Display for AttackCombination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.label())
    }
}

/// All `prod(u_i + 1)` combinations in lexicographic order, all-zero first.
pub fn enumerate_combinations(bounds: &[u32]) -> Result<Vec<AttackCombination>> {
    if bounds.is_empty() || bounds.iter().any(|&u| u == 0) {
        return Err(Error::BadAttackBounds);
    }
    let mut out = Vec::new();
    let mut levels = vec![0u32; bounds.len()];
    loop {
        out.push(AttackCombination {
            levels: levels.clone(),
            bounds: bounds.to_vec(),
        });
        // odometer increment, last coordinate fastest
        let mut pos = bounds.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            if levels[pos] < bounds[pos] {
                levels[pos] += 1;
                for l in levels.iter_mut().skip(pos + 1) {
                    *l = 0;
                }
                break;
            }
        }
    }
}

/// Probability distribution over attack combinations.
///
/// Weights are non-negative and sum to one within [`PRIOR_SUM_TOLERANCE`].
/// Serializes as a list of `{levels, bounds, weight}` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct MixturePrior<F> {
    weights: BTreeMap<AttackCombination, F>,
}

#[derive(Serialize, Deserialize)]
struct PriorEntry<F> {
    levels: Vec<u32>,
    bounds: Vec<u32>,
    weight: F,
}

impl<F: Real + Serialize> Serialize for MixturePrior<F> {
    fn serialize<S>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error>
    where
        S: serde::Serializer,
    {
        let entries: Vec<PriorEntry<F>> = self
            .weights
            .iter()
            .map(|(combo, &weight)| PriorEntry {
                levels: combo.levels().to_vec(),
                bounds: combo.bounds().to_vec(),
                weight,
            })
            .collect();
        entries.serialize(serializer)
    }
}

impl<'de, F: Real + Deserialize<'de>> Deserialize<'de> for MixturePrior<F> {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let entries: Vec<PriorEntry<F>> = Vec::deserialize(deserializer)?;
        let mut weights = BTreeMap::new();
        for entry in entries {
            let combo = AttackCombination::new(entry.levels, entry.bounds)
                .map_err(serde::de::Error::custom)?;
            weights.insert(combo, entry.weight);
        }
        MixturePrior::new(weights).map_err(serde::de::Error::custom)
    }
}

impl<F: Real> MixturePrior<F> {
    pub fn new(weights: BTreeMap<AttackCombination, F>) -> Result<Self> {
        let mut sum = 0.0;
        for (combo, &w) in &weights {
            let w = to_f64(w);
            if w < 0.0 || !w.is_finite() {
                return Err(Error::NegativePriorWeight {
                    combination: combo.label(),
                    weight: w,
                });
            }
            sum += w;
        }
        if (sum - 1.0).abs() > PRIOR_SUM_TOLERANCE {
            return Err(Error::PriorSum {
                sum,
                tolerance: PRIOR_SUM_TOLERANCE,
            });
        }
        Ok(MixturePrior { weights })
    }

    pub fn from_pairs(pairs: Vec<(AttackCombination, F)>) -> Result<Self> {
        MixturePrior::new(pairs.into_iter().collect())
    }

    /// Prior with all mass on the zero-effort combination.
    pub fn zero_effort(bounds: Vec<u32>) -> Result<Self> {
        let combos = enumerate_combinations(&bounds)?;
        let mut weights = BTreeMap::new();
        for c in combos {
            let w = if c.is_zero_effort() { F::one() } else { F::zero() };
            weights.insert(c, w);
        }
        MixturePrior::new(weights)
    }

    pub fn weights(&self) -> &BTreeMap<AttackCombination, F> {
        &self.weights
    }

    pub fn weight(&self, combo: &AttackCombination) -> Option<F> {
        self.weights.get(combo).copied()
    }

    /// Weight of the all-zero combination (0 if absent).
    pub fn zero_effort_weight(&self) -> F {
        self.weights
            .iter()
            .find(|(c, _)| c.is_zero_effort())
            .map(|(_, &w)| w)
            .unwrap_or_else(F::zero)
    }

    /// Non-zero-effort combinations with strictly positive weight.
    pub fn attack_support(&self) -> impl Iterator<Item = (&AttackCombination, F)> {
        self.weights
            .iter()
            .filter(|(c, &w)| !c.is_zero_effort() && w > F::zero())
            .map(|(c, &w)| (c, w))
    }

    /// Draw a combination with probability proportional to its weight.
    ///
    /// Iteration follows the sorted combination order, so the draw is a pure
    /// function of `uniform`.
    pub fn draw(&self, uniform: F) -> &AttackCombination {
        let mut acc = F::zero();
        let mut last = None;
        for (combo, &w) in &self.weights {
            if w <= F::zero() {
                continue;
            }
            acc = acc + w;
            last = Some(combo);
            if uniform < acc {
                return combo;
            }
        }
        last.expect("prior has positive total mass")
    }
}

/// Accept the prior iff its weights cover exactly `combos`, are non-negative
/// and sum to one.
pub fn validate_prior<F: Real>(
    prior: MixturePrior<F>,
    combos: &[AttackCombination],
) -> Result<MixturePrior<F>> {
    for combo in combos {
        if !prior.weights.contains_key(combo) {
            return Err(Error::PriorMissingCombination {
                combination: combo.label(),
            });
        }
    }
    if prior.weights.len() != combos.len() {
        let expected: std::collections::BTreeSet<_> = combos.iter().collect();
        let extra = prior
            .weights
            .keys()
            .find(|c| !expected.contains(c))
            .expect("length mismatch implies an extra combination");
        return Err(Error::PriorExtraCombination {
            combination: extra.label(),
        });
    }
    // Weight and sum constraints were enforced at construction; re-check sum
    // so priors deserialized through other paths cannot sneak past.
    MixturePrior::new(prior.weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn combo(levels: &[u32], bounds: &[u32]) -> AttackCombination {
        AttackCombination::new(levels.to_vec(), bounds.to_vec()).unwrap()
    }

    #[test]
    fn binary_two_matchers() {
        let combos = enumerate_combinations(&[1, 1]).unwrap();
        let levels: Vec<&[u32]> = combos.iter().map(|c| c.levels()).collect();
        assert_eq!(levels, vec![&[0, 0][..], &[0, 1], &[1, 0], &[1, 1]]);
        assert!(combos[0].is_zero_effort());
    }

    #[test]
    fn product_rule_cardinality() {
        assert_eq!(enumerate_combinations(&[3, 3]).unwrap().len(), 16);
        assert_eq!(enumerate_combinations(&[1]).unwrap().len(), 2);
    }

    #[test]
    fn empty_bounds_rejected() {
        assert!(matches!(
            enumerate_combinations(&[]),
            Err(Error::BadAttackBounds)
        ));
        assert!(matches!(
            enumerate_combinations(&[1, 0]),
            Err(Error::BadAttackBounds)
        ));
    }

    #[test]
    fn exhaustive_cardinality_small_bounds() {
        // every bounds vector with entries in 1..=4 and length 1..=3
        for len in 1..=3usize {
            for code in 0..4usize.pow(len as u32) {
                let bounds: Vec<u32> = (0..len)
                    .map(|i| 1 + ((code / 4usize.pow(i as u32)) % 4) as u32)
                    .collect();
                let expect: usize = bounds.iter().map(|&u| u as usize + 1).product();
                assert_eq!(enumerate_combinations(&bounds).unwrap().len(), expect);
            }
        }
    }

    #[test]
    fn paper_prior_is_valid() {
        let bounds = [1u32, 1];
        let combos = enumerate_combinations(&bounds).unwrap();
        let prior = MixturePrior::from_pairs(vec![
            (combo(&[0, 0], &bounds), 0.5),
            (combo(&[1, 0], &bounds), 0.25),
            (combo(&[0, 1], &bounds), 0.25),
            (combo(&[1, 1], &bounds), 0.0),
        ])
        .unwrap();
        let prior = validate_prior(prior, &combos).unwrap();
        assert_eq!(prior.zero_effort_weight(), 0.5);
        assert_eq!(prior.attack_support().count(), 2);
    }

    #[test]
    fn pure_zero_effort_valid() {
        let prior = MixturePrior::<f64>::zero_effort(vec![1, 1]).unwrap();
        assert_eq!(prior.zero_effort_weight(), 1.0);
        assert_eq!(prior.attack_support().count(), 0);
    }

    #[test]
    fn bad_sum_rejected() {
        let bounds = [1u32];
        let err = MixturePrior::from_pairs(vec![
            (combo(&[0], &bounds), 0.5),
            (combo(&[1], &bounds), 0.4),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::PriorSum { .. }));
    }

    #[test]
    fn negative_weight_rejected() {
        let bounds = [1u32];
        let err = MixturePrior::from_pairs(vec![
            (combo(&[0], &bounds), 1.2),
            (combo(&[1], &bounds), -0.2),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::NegativePriorWeight { .. }));
    }

    #[test]
    fn coverage_mismatches_detected() {
        let bounds = [1u32, 1];
        let combos = enumerate_combinations(&bounds).unwrap();
        let missing = MixturePrior::from_pairs(vec![
            (combo(&[0, 0], &bounds), 0.5),
            (combo(&[1, 1], &bounds), 0.5),
        ])
        .unwrap();
        assert!(matches!(
            validate_prior(missing, &combos),
            Err(Error::PriorMissingCombination { .. })
        ));

        let extra = MixturePrior::from_pairs(vec![
            (combo(&[0, 0], &bounds), 0.5),
            (combo(&[0, 1], &bounds), 0.5),
            (combo(&[1, 0], &bounds), 0.0),
            (combo(&[1, 1], &bounds), 0.0),
            (
                AttackCombination::new(vec![0, 2], vec![1, 2]).unwrap(),
                0.0,
            ),
        ])
        .unwrap();
        assert!(matches!(
            validate_prior(extra, &combos),
            Err(Error::PriorExtraCombination { .. })
        ));
    }

    #[test]
    fn draw_respects_mass() {
        let bounds = [1u32];
        let prior = MixturePrior::from_pairs(vec![
            (combo(&[0], &bounds), 0.25),
            (combo(&[1], &bounds), 0.75),
        ])
        .unwrap();
        assert!(prior.draw(0.1).is_zero_effort());
        assert!(!prior.draw(0.3).is_zero_effort());
        assert!(!prior.draw(0.999).is_zero_effort());
    }
}
