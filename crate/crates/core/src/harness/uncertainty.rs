//! Uncertainty analysis: scenario grids over the feasible (mu, sigma) region
//! and per-matcher confidence bands over the induced DET curves.

use rand::Rng;

use crate::attack::AttackCombination;
use crate::beta::{clamp_to_admissible, AttackScenario, BetaMeanStd};
use crate::data::{Label, ScoreDataset};
use crate::error::Result;
use crate::fusion::TrainedRule;
use crate::metrics::{det_curve, impact_bands, BandMethod, ConfidenceBand, DetCurve, DetTag};
use crate::rng::{domain, mix, substream};
use crate::scalar::{real, to_f64, Real};
use crate::sim::{spoof_dataset, SpoofPlan};

/// Rejection-sampling statistics of a grid draw.
#[derive(Debug, Clone, Copy)]
pub struct GridStats {
    pub accepted: usize,
    pub proposals: usize,
}

/// Sample `n` attack scenarios uniformly over the feasible region
/// `{0 < mu < 1, 0 < sigma < sqrt(mu (1 - mu))}` by rejection from the unit
/// square, sorted by increasing attack impact.
pub fn uncertainty_grid<F: Real>(n: usize, seed: u64) -> Vec<AttackScenario<F>> {
    uncertainty_grid_with_stats(n, seed).0
}

/// As [`uncertainty_grid`], additionally reporting the number of proposals
/// the rejection sampler consumed.
pub fn uncertainty_grid_with_stats<F: Real>(
    n: usize,
    seed: u64,
) -> (Vec<AttackScenario<F>>, GridStats) {
    let mut rng = substream(seed, &[domain::GRID]);
    let mut scenarios: Vec<AttackScenario<F>> = Vec::with_capacity(n);
    let mut proposals = 0usize;
    while scenarios.len() < n {
        proposals += 1;
        let mu: f64 = rng.gen();
        let sigma: f64 = rng.gen();
        if mu <= 0.0 || mu >= 1.0 || sigma <= 0.0 {
            continue;
        }
        if sigma * sigma >= mu * (1.0 - mu) {
            continue;
        }
        let meta = BetaMeanStd::new(real::<F>(mu), real::<F>(sigma))
            .expect("accepted point is feasible");
        scenarios.push(AttackScenario::new(
            format!("grid_{:04}", scenarios.len()),
            meta,
        ));
    }
    scenarios.sort_by(|a, b| {
        to_f64(a.impact())
            .partial_cmp(&to_f64(b.impact()))
            .expect("finite impacts")
    });
    (
        scenarios,
        GridStats {
            accepted: n,
            proposals,
        },
    )
}

/// The two limit scenarios of the mixing model, clamped just inside the
/// feasible region: fakes distributed as zero-effort impostors (best case)
/// and as genuine users (worst case).
pub fn limit_scenarios<F: Real>() -> (AttackScenario<F>, AttackScenario<F>) {
    let eps = real::<F>(1e-3);
    let best = clamp_to_admissible(F::zero(), F::zero(), eps);
    let worst = clamp_to_admissible(F::one(), F::zero(), eps);
    (
        AttackScenario::new("limit_zero_effort", best),
        AttackScenario::new("limit_worst_case", worst),
    )
}

/// Seed for spoofing a dataset under `scenario` on `matcher`: a pure
/// function of the master seed, the matcher and the scenario parameters, so
/// any caller reproduces the same rewrite.
pub fn scenario_spoof_seed<F: Real>(seed: u64, matcher: usize, scenario: &AttackScenario<F>) -> u64 {
    mix(
        seed,
        &[
            domain::SPOOF,
            matcher as u64,
            to_f64(scenario.meta().mu()).to_bits(),
            to_f64(scenario.meta().sigma()).to_bits(),
        ],
    )
}

/// DET curve of `rule` on `test` when `matcher` is attacked under
/// `scenario`, tagged with the scenario's impact.
pub fn scenario_det_curve<F: Real>(
    test: &ScoreDataset<F>,
    rule: &TrainedRule<F>,
    matcher: usize,
    scenario: &AttackScenario<F>,
    bounds: &[u32],
    seed: u64,
) -> Result<DetCurve<F>> {
    let mut levels = vec![0u32; bounds.len()];
    levels[matcher] = 1;
    let combination = AttackCombination::new(levels, bounds.to_vec())?;
    let plan = SpoofPlan::new(
        combination.clone(),
        [(matcher, scenario.clone())].into_iter().collect(),
    )?;
    let spoofed = spoof_dataset(test, &plan, scenario_spoof_seed(seed, matcher, scenario))?;

    let fused_genuine: Vec<F> = test
        .samples()
        .iter()
        .filter(|s| s.label == Label::Genuine)
        .map(|s| rule.fuse(&s.scores))
        .collect();
    let fused_spoofed: Vec<F> = spoofed
        .samples()
        .iter()
        .filter(|s| s.label == Label::Impostor)
        .map(|s| rule.fuse(&s.scores))
        .collect();
    let mut curve = det_curve(&fused_genuine, &fused_spoofed)?;
    curve.tag = Some(DetTag {
        combination: Some(combination),
        impact: scenario.impact(),
        name: Some(scenario.name().to_string()),
    });
    Ok(curve)
}

/// A named curve sampled on the band's FRR grid.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NamedCurve<F> {
    pub name: String,
    pub impact: F,
    pub far: Vec<F>,
}

/// Band of one matcher under one rule, with the known-scenario curves.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BandReport<F> {
    pub matcher: usize,
    pub band: ConfidenceBand<F>,
    pub known_curves: Vec<NamedCurve<F>>,
    /// Whether every known curve lies inside the envelope pointwise.
    pub containment: Option<bool>,
}

/// Build the uncertainty band of one matcher: DET curves for every grid
/// scenario (plus the known scenarios, when given), bucketed by impact.
#[allow(clippy::too_many_arguments)]
pub fn matcher_band<F: Real>(
    test: &ScoreDataset<F>,
    rule: &TrainedRule<F>,
    matcher: usize,
    grid_scenarios: &[AttackScenario<F>],
    known_scenarios: &[AttackScenario<F>],
    bounds: &[u32],
    frr_grid: &[F],
    buckets: &[F],
    method: BandMethod,
    seed: u64,
) -> Result<BandReport<F>> {
    let mut curves = Vec::with_capacity(grid_scenarios.len() + known_scenarios.len());
    for scenario in grid_scenarios.iter().chain(known_scenarios) {
        curves.push(scenario_det_curve(
            test, rule, matcher, scenario, bounds, seed,
        )?);
    }
    let band = impact_bands(&curves, buckets, frr_grid, method);

    let mut known_curves = Vec::with_capacity(known_scenarios.len());
    let mut contained = true;
    for scenario in known_scenarios {
        let curve = scenario_det_curve(test, rule, matcher, scenario, bounds, seed)?;
        let far = curve.sample_on_grid(frr_grid);
        contained &= band.contains(&far, real(1e-12));
        known_curves.push(NamedCurve {
            name: scenario.name().to_string(),
            impact: scenario.impact(),
            far,
        });
    }
    Ok(BandReport {
        matcher,
        band,
        known_curves,
        containment: if known_scenarios.is_empty() {
            None
        } else {
            Some(contained)
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_empty_for_zero() {
        assert!(uncertainty_grid::<f64>(0, 1).is_empty());
    }

    #[test]
    fn grid_points_strictly_feasible_and_sorted() {
        let scenarios = uncertainty_grid::<f64>(500, 7);
        assert_eq!(scenarios.len(), 500);
        for s in &scenarios {
            let (mu, sigma) = (s.meta().mu(), s.meta().sigma());
            assert!(mu > 0.0 && mu < 1.0);
            assert!(sigma > 0.0);
            assert!(sigma * sigma < mu * (1.0 - mu));
        }
        for pair in scenarios.windows(2) {
            assert!(pair[0].impact() <= pair[1].impact());
        }
    }

    #[test]
    fn grid_is_deterministic() {
        let a = uncertainty_grid::<f64>(50, 3);
        let b = uncertainty_grid::<f64>(50, 3);
        assert_eq!(a, b);
    }

    #[test]
    fn limit_scenarios_bracket_impact() {
        let (best, worst) = limit_scenarios::<f64>();
        assert!(best.impact() < 1e-6);
        assert!(worst.impact() > 1.0 - 1e-6);
    }
}
