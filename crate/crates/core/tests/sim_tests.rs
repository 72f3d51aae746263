//! Distributional checks on the fake-score simulator: limit cases, the
//! expectation identity, hull bounds, SFAR ordering and resampling
//! frequencies.

mod common;

use std::collections::BTreeMap;

use fusim::attack::{enumerate_combinations, AttackCombination, MixturePrior};
use fusim::beta::{clamp_to_admissible, AttackScenario, BetaMeanStd, BUILTIN_SCENARIOS};
use fusim::data::{Label, Sample, ScoreDataset};
use fusim::sim::{
    resample_training_impostors, sample_fake_scores, spoof_dataset, ScenarioAssignment, SpoofPlan,
};
use rand::Rng;

fn pools(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = fusim::rng::substream(seed, &[]);
    let genuine = (0..n).map(|_| 0.55 + 0.4 * rng.gen::<f64>()).collect();
    let impostor = (0..n).map(|_| 0.05 + 0.4 * rng.gen::<f64>()).collect();
    (genuine, impostor)
}

#[test]
fn near_degenerate_alpha_one_matches_genuine_pool() {
    let (genuine, impostor) = pools(10_000, 1);
    let ms = clamp_to_admissible(1.0, 0.0, 1e-3);
    let fakes = sample_fake_scores(&genuine, &impostor, &ms, 10_000, 2).unwrap();
    let d = common::ks_statistic(&fakes, &genuine);
    let crit = common::ks_critical_1pct(fakes.len(), genuine.len());
    assert!(d < crit, "KS {d} >= critical {crit}");
}

#[test]
fn near_degenerate_alpha_zero_matches_impostor_pool() {
    let (genuine, impostor) = pools(10_000, 3);
    let ms = clamp_to_admissible(0.0, 0.0, 1e-3);
    let fakes = sample_fake_scores(&genuine, &impostor, &ms, 10_000, 4).unwrap();
    let d = common::ks_statistic(&fakes, &impostor);
    let crit = common::ks_critical_1pct(fakes.len(), impostor.len());
    assert!(d < crit, "KS {d} >= critical {crit}");
}

#[test]
fn expectation_identity_for_all_presets() {
    let (genuine, impostor) = pools(20_000, 5);
    let mg = common::mean(&genuine);
    let mi = common::mean(&impostor);
    for &(name, mu, sigma) in &BUILTIN_SCENARIOS {
        let ms = BetaMeanStd::new(mu, sigma).unwrap();
        let n = 100_000usize;
        let fakes = sample_fake_scores(&genuine, &impostor, &ms, n, 6).unwrap();
        let want = mu * mg + (1.0 - mu) * mi;
        let got = common::mean(&fakes);
        let se = common::sample_std(&fakes) / (n as f64).sqrt();
        assert!(
            (got - want).abs() <= 3.0 * se,
            "{name}: mean {got} vs {want} (se {se})"
        );
    }
}

#[test]
fn fakes_respect_pool_hull() {
    let (genuine, impostor) = pools(5_000, 7);
    let lo = impostor.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = genuine.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for &(_, mu, sigma) in &BUILTIN_SCENARIOS {
        let ms = BetaMeanStd::new(mu, sigma).unwrap();
        let fakes = sample_fake_scores(&genuine, &impostor, &ms, 20_000, 8).unwrap();
        assert!(fakes.iter().all(|&x| x >= lo && x <= hi));
    }
}

fn two_matcher_dataset(n_per_class: usize, seed: u64) -> ScoreDataset<f64> {
    let mut rng = fusim::rng::substream(seed, &[]);
    let mut samples = Vec::new();
    for i in 0..n_per_class {
        samples.push(Sample::new(
            format!("g{i}"),
            vec![0.55 + 0.4 * rng.gen::<f64>(), 0.5 + 0.45 * rng.gen::<f64>()],
            Label::Genuine,
        ));
        samples.push(Sample::new(
            format!("i{i}"),
            vec![0.05 + 0.4 * rng.gen::<f64>(), 0.02 + 0.45 * rng.gen::<f64>()],
            Label::Impostor,
        ));
    }
    ScoreDataset::new(2, samples)
}

/// Sum-rule SFAR at a fixed threshold lies strictly between the zero-effort
/// FAR and the worst-case (fakes drawn as genuine) SFAR.
#[test]
fn sfar_ordering_between_limit_cases() {
    let ds = two_matcher_dataset(10_000, 11);
    let fused = |set: &ScoreDataset<f64>, label: Label| -> Vec<f64> {
        set.samples()
            .iter()
            .filter(|s| s.label == label)
            .map(|s| s.scores.iter().sum())
            .collect()
    };
    let genuine_fused = fused(&ds, Label::Genuine);
    let t = fusim::metrics::threshold_for_frr(&genuine_fused, 0.02).unwrap();

    let combo = AttackCombination::new(vec![1, 0], vec![1, 1]).unwrap();
    let rate_under = |ms: BetaMeanStd<f64>, seed: u64| -> f64 {
        let scenario = AttackScenario::new("case", ms);
        let plan = SpoofPlan::new(combo.clone(), [(0usize, scenario)].into_iter().collect())
            .unwrap();
        let spoofed = spoof_dataset(&ds, &plan, seed).unwrap();
        let fused_spoofed = fused(&spoofed, Label::Impostor);
        let (_, sfar) =
            fusim::metrics::error_rates_at(&genuine_fused, &fused_spoofed, t).unwrap();
        sfar
    };

    let (_, far) = fusim::metrics::error_rates_at(&genuine_fused, &fused(&ds, Label::Impostor), t)
        .unwrap();
    let sfar_high = rate_under(BetaMeanStd::new(0.40, 0.26).unwrap(), 21);
    let sfar_worst = rate_under(clamp_to_admissible(1.0, 0.0, 1e-3), 22);

    assert!(
        sfar_high > far,
        "high-impact SFAR {sfar_high} should exceed FAR {far}"
    );
    assert!(
        sfar_high <= sfar_worst + 0.01,
        "SFAR {sfar_high} above worst case {sfar_worst}"
    );
}

#[test]
fn resampled_combination_frequencies_match_prior() {
    let ds = two_matcher_dataset(10_000, 13);
    let combos = enumerate_combinations(&[1, 1]).unwrap();
    let prior = MixturePrior::from_pairs(vec![
        (combos[0].clone(), 0.5f64),
        (combos[1].clone(), 0.25),
        (combos[2].clone(), 0.25),
        (combos[3].clone(), 0.0),
    ])
    .unwrap();
    let mut scenarios = ScenarioAssignment::new();
    scenarios.insert(
        (0, 1),
        AttackScenario::new("m0", BetaMeanStd::new(0.4, 0.26).unwrap()),
    );
    scenarios.insert(
        (1, 1),
        AttackScenario::new("m1", BetaMeanStd::new(0.91, 0.11).unwrap()),
    );
    let out = resample_training_impostors(&ds, &prior, &scenarios, 17).unwrap();

    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for sample in out.samples().iter().filter(|s| s.label == Label::Impostor) {
        let key = sample
            .provenance
            .as_ref()
            .map(|c| c.label())
            .unwrap_or_else(|| "0,0".to_string());
        *counts.entry(key).or_default() += 1;
    }
    let n = 10_000.0;
    let observed = [
        counts.get("0,0").copied().unwrap_or(0) as f64,
        counts.get("0,1").copied().unwrap_or(0) as f64,
        counts.get("1,0").copied().unwrap_or(0) as f64,
    ];
    let expected = [0.5 * n, 0.25 * n, 0.25 * n];
    assert_eq!(counts.get("1,1"), None, "zero-weight combination drawn");
    let stat = common::chi_square(&observed, &expected);
    let crit = common::CHI2_CRIT_1PCT[1]; // dof 2
    assert!(stat < crit, "chi-square {stat} >= {crit}; counts {counts:?}");
}

#[test]
fn resample_single_matcher_degenerate_matches_genuine() {
    // single matcher, prior all mass on attack, alpha ~ 1
    let mut samples = Vec::new();
    let mut rng = fusim::rng::substream(19, &[]);
    for i in 0..10_000 {
        samples.push(Sample::new(
            format!("g{i}"),
            vec![0.55 + 0.4 * rng.gen::<f64>()],
            Label::Genuine,
        ));
        samples.push(Sample::new(
            format!("i{i}"),
            vec![0.05 + 0.4 * rng.gen::<f64>()],
            Label::Impostor,
        ));
    }
    let ds = ScoreDataset::new(1, samples);
    let combos = enumerate_combinations(&[1]).unwrap();
    let prior = MixturePrior::from_pairs(vec![
        (combos[0].clone(), 0.0f64),
        (combos[1].clone(), 1.0),
    ])
    .unwrap();
    let mut scenarios = ScenarioAssignment::new();
    scenarios.insert(
        (0, 1),
        AttackScenario::new("worst", clamp_to_admissible(1.0, 0.0, 1e-3)),
    );
    let out = resample_training_impostors(&ds, &prior, &scenarios, 23).unwrap();
    let genuine = ds.class_scores(0, Label::Genuine);
    let rewritten = out.class_scores(0, Label::Impostor);
    let d = common::ks_statistic(&rewritten, &genuine);
    let crit = common::ks_critical_1pct(rewritten.len(), genuine.len());
    assert!(d < crit, "KS {d} >= {crit}");
}

#[test]
fn sidecar_serialization_round_trips_dataset() {
    let ds = two_matcher_dataset(50, 29);
    let combo = AttackCombination::new(vec![1, 0], vec![1, 1]).unwrap();
    let plan = SpoofPlan::new(
        combo,
        [(
            0usize,
            AttackScenario::new("fp_high", BetaMeanStd::new(0.4, 0.26).unwrap()),
        )]
        .into_iter()
        .collect(),
    )
    .unwrap();
    let spoofed = spoof_dataset(&ds, &plan, 31).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spoofed.csv");
    fusim::sim::write_spoofed_csv(&spoofed, &plan, 31, &path).unwrap();

    let back: ScoreDataset<f64> = fusim::data::read_scores_csv(&path).unwrap();
    assert_eq!(back.len(), spoofed.len());
    for (a, b) in spoofed.samples().iter().zip(back.samples()) {
        assert_eq!(a.scores, b.scores);
        assert_eq!(a.label, b.label);
    }
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path.with_extension("plan.json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["combination"], serde_json::json!([1, 0]));
    assert_eq!(sidecar["seed"], serde_json::json!(31));
    assert_eq!(sidecar["scenarios"][0]["name"], "fp_high");
}
