//! End-to-end experiment machinery: data preparation, the security-evaluation
//! driver, uncertainty bands, and GFAR-constrained rule selection.

pub mod config;
pub mod prep;
pub mod uncertainty;

pub use config::{
    BandConfig, ExperimentConfig, MatcherSpec, PriorConfig, PriorWeight, ResolvedExperiment,
    ScenarioBinding, ScenarioRef, SplitSpec, SvmGridSpec, SyntheticSpec, DEFAULT_SEED,
};
pub use prep::{
    build_chimerical, minmax_normalize, prepare_runs, split_runs, synth_scores, DataSource,
};
pub use uncertainty::{
    limit_scenarios, matcher_band, scenario_det_curve, scenario_spoof_seed, uncertainty_grid,
    uncertainty_grid_with_stats, BandReport, GridStats, NamedCurve,
};

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::MixturePrior;
use crate::beta::ScenarioRegistry;
use crate::data::{Label, ScoreDataset};
use crate::error::{Error, Result};
use crate::fusion::{
    select_hyperparams, train_lda, train_llr, train_secure_llr, train_svm_rbf, FixedRule,
    GfarResampler, RuleKind, SecureLlrOptions, SecureVariant, SelectionObjective, TrainedRule,
};
use crate::metrics::{
    average_det, det_curve, error_rates_at, frr_grid_default, gfar, impact_buckets_default,
    threshold_for_frr, DetCurve,
};
use crate::rng::{domain, mix};
use crate::scalar::{real, to_f64, Real};
use crate::sim::{resample_training_impostors, spoof_dataset, SpoofPlan};

/// Mean and (unbiased) standard deviation across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat<F> {
    pub mean: F,
    pub std: F,
}

fn stat_of<F: Real>(values: &[F]) -> Stat<F> {
    let n = values.len();
    let mean = values.iter().copied().sum::<F>() / real::<F>(n as f64);
    let std = if n < 2 {
        F::zero()
    } else {
        (values
            .iter()
            .map(|&v| {
                let d = v - mean;
                d * d
            })
            .sum::<F>()
            / real::<F>((n - 1) as f64))
        .sqrt()
    };
    Stat { mean, std }
}

/// Raw operating-point numbers of one (rule, run) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord<F> {
    pub run: usize,
    pub threshold: F,
    pub frr: F,
    pub far: F,
    /// SFAR per combination label ("1,0", ...).
    pub sfar: BTreeMap<String, F>,
    pub gfar: Option<F>,
    #[serde(default = "Option::default", skip_serializing_if = "Option::is_none")]
    pub svm_c: Option<F>,
    #[serde(default = "Option::default", skip_serializing_if = "Option::is_none")]
    pub svm_gamma: Option<F>,
}

/// A DET curve averaged across runs, sampled on a common FRR grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveOnGrid<F> {
    pub frr: Vec<F>,
    pub far: Vec<F>,
}

/// Aggregated results of one rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleReport<F> {
    pub threshold: Stat<F>,
    pub frr: Stat<F>,
    pub far: Stat<F>,
    pub sfar: BTreeMap<String, Stat<F>>,
    #[serde(default = "Option::default", skip_serializing_if = "Option::is_none")]
    pub gfar: Option<Stat<F>>,
    pub det_no_attack: CurveOnGrid<F>,
    pub det_by_combination: BTreeMap<String, CurveOnGrid<F>>,
    pub runs: Vec<RunRecord<F>>,
}

/// Full evaluation report: per-rule operating points, averaged DET curves,
/// and run metadata. Serialization is deterministic for a fixed config and
/// seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "F: Real + Serialize",
    deserialize = "F: Real + serde::de::DeserializeOwned"
))]
pub struct EvalReport<F: Real> {
    pub config_hash: String,
    pub seed: u64,
    pub frr_max: F,
    pub n_matchers: usize,
    pub n_runs: usize,
    pub prior: MixturePrior<F>,
    pub combinations: Vec<String>,
    pub rules: BTreeMap<String, RuleReport<F>>,
    /// Rules-by-metrics summary table (percent, mean and std).
    pub summary_csv: String,
    #[serde(default = "Option::default", skip_serializing_if = "Option::is_none")]
    pub bands: Option<BTreeMap<String, Vec<BandReport<F>>>>,
}

fn annotate<F>(rule: RuleKind, run: usize) -> impl Fn(Error) -> Error {
    let _ = std::marker::PhantomData::<F>;
    move |source| Error::Context {
        rule: rule.name().to_string(),
        run,
        source: Box::new(source),
    }
}

fn rule_tag(rule: RuleKind) -> u64 {
    RuleKind::ALL.iter().position(|&r| r == rule).unwrap() as u64
}

/// Train one rule on a (normalized) training split.
fn train_rule<F: Real>(
    rule: RuleKind,
    train: &ScoreDataset<F>,
    resolved: &ResolvedExperiment<F>,
    config: &ExperimentConfig<F>,
    run: usize,
) -> Result<(TrainedRule<F>, Option<(F, F)>)> {
    let seed = config.seed;
    let tag = rule_tag(rule);
    let secure_options = |sim_seed: u64| SecureLlrOptions {
        estimator: config.estimator,
        n_sim: config.alpha_sim_n,
        seed: sim_seed,
    };
    let svm_tol = real::<F>(1e-3);
    match rule {
        RuleKind::Sum => Ok((TrainedRule::Fixed { kind: FixedRule::Sum }, None)),
        RuleKind::Product => Ok((TrainedRule::Fixed { kind: FixedRule::Product }, None)),
        RuleKind::Minimum => Ok((TrainedRule::Fixed { kind: FixedRule::Minimum }, None)),
        RuleKind::Lda => Ok((TrainedRule::Lda { model: train_lda(train)? }, None)),
        RuleKind::Llr => Ok((TrainedRule::Llr { model: train_llr(train)? }, None)),
        RuleKind::SvmRbf => {
            let (c, gamma) = select_hyperparams(
                train,
                &config.svm.c_grid,
                &config.svm.gamma_grid,
                config.svm.folds,
                SelectionObjective::FarAtFrr { frr_max: config.frr_max },
                None,
                mix(seed, &[domain::CV, run as u64, tag]),
            )?;
            let model = train_svm_rbf(train, c, gamma, svm_tol)?;
            Ok((TrainedRule::Svm { model }, Some((c, gamma))))
        }
        RuleKind::ExtendedLlr | RuleKind::UniformLlr => {
            let variant = if rule == RuleKind::ExtendedLlr {
                SecureVariant::Extended
            } else {
                SecureVariant::Uniform
            };
            let model = train_secure_llr(
                train,
                &resolved.prior,
                variant,
                None,
                &secure_options(0),
            )?;
            Ok((TrainedRule::SecureLlr { model }, None))
        }
        RuleKind::AlphaLlr => {
            let model = train_secure_llr(
                train,
                &resolved.prior,
                SecureVariant::Alpha,
                Some(&resolved.assignment),
                &secure_options(mix(seed, &[domain::ALPHA_DENSITY, run as u64])),
            )?;
            Ok((TrainedRule::SecureLlr { model }, None))
        }
        RuleKind::AlphaSvmRbf => {
            let resampler = GfarResampler {
                prior: &resolved.prior,
                scenarios: &resolved.assignment,
                seed: mix(seed, &[domain::RESAMPLE, run as u64]),
            };
            let (c, gamma) = select_hyperparams(
                train,
                &config.svm.c_grid,
                &config.svm.gamma_grid,
                config.svm.folds,
                SelectionObjective::GfarAtFrr { frr_max: config.frr_max },
                Some(&resampler),
                mix(seed, &[domain::CV, run as u64, tag]),
            )?;
            let resampled = resample_training_impostors(
                train,
                &resolved.prior,
                &resolved.assignment,
                mix(seed, &[domain::RESAMPLE, run as u64, u64::MAX]),
            )?;
            let model = train_svm_rbf(&resampled, c, gamma, svm_tol)?;
            Ok((TrainedRule::Svm { model }, Some((c, gamma))))
        }
    }
}

struct RunOutput<F> {
    records: Vec<RunRecord<F>>,
    det_no_attack: Vec<DetCurve<F>>,
    det_by_combination: Vec<Vec<DetCurve<F>>>,
}

fn fused<F: Real>(rule: &TrainedRule<F>, ds: &ScoreDataset<F>, label: Label) -> Vec<F> {
    ds.samples()
        .iter()
        .filter(|s| s.label == label)
        .map(|s| rule.fuse(&s.scores))
        .collect()
}

fn evaluate_run<F: Real>(
    config: &ExperimentConfig<F>,
    resolved: &ResolvedExperiment<F>,
    run: usize,
    train_raw: &ScoreDataset<F>,
    test_raw: &ScoreDataset<F>,
) -> Result<RunOutput<F>> {
    train_raw.validate()?;
    test_raw.validate()?;
    let (train, mut others) = minmax_normalize(train_raw, &[test_raw])?;
    let test = others.pop().expect("one normalized set");

    // spoofed test sets are shared across rules
    let mut spoofed_sets = Vec::with_capacity(resolved.combinations.len());
    for (combo_index, combo) in resolved.combinations.iter().enumerate() {
        let plan = SpoofPlan::from_assignment(combo.clone(), &resolved.assignment)?;
        let spoofed = spoof_dataset(
            &test,
            &plan,
            mix(config.seed, &[domain::EVAL, run as u64, combo_index as u64]),
        )?;
        spoofed_sets.push((combo.clone(), spoofed));
    }

    let mut records = Vec::with_capacity(config.rules.len());
    let mut det_no_attack = Vec::with_capacity(config.rules.len());
    let mut det_by_combination = Vec::with_capacity(config.rules.len());
    for &rule in &config.rules {
        let wrap = annotate::<F>(rule, run);
        let (trained, svm_params) =
            train_rule(rule, &train, resolved, config, run).map_err(&wrap)?;

        let fused_genuine = fused(&trained, &test, Label::Genuine);
        let fused_impostor = fused(&trained, &test, Label::Impostor);
        let threshold_source = if config.threshold_on_train {
            fused(&trained, &train, Label::Genuine)
        } else {
            fused_genuine.clone()
        };
        let threshold = threshold_for_frr(&threshold_source, config.frr_max).map_err(&wrap)?;
        let (frr, far) =
            error_rates_at(&fused_genuine, &fused_impostor, threshold).map_err(&wrap)?;

        let mut sfar_by_combo = BTreeMap::new();
        let mut sfar_labels = BTreeMap::new();
        let mut combo_curves = Vec::new();
        for (combo, spoofed) in &spoofed_sets {
            let fused_spoofed = fused(&trained, spoofed, Label::Impostor);
            let (_, sfar) =
                error_rates_at(&fused_genuine, &fused_spoofed, threshold).map_err(&wrap)?;
            sfar_by_combo.insert(combo.clone(), sfar);
            sfar_labels.insert(combo.label(), sfar);
            combo_curves.push(det_curve(&fused_genuine, &fused_spoofed).map_err(&wrap)?);
        }
        let gfar_value = if spoofed_sets.is_empty() {
            None
        } else {
            Some(gfar(far, &sfar_by_combo, &resolved.prior).map_err(&wrap)?)
        };

        records.push(RunRecord {
            run,
            threshold,
            frr,
            far,
            sfar: sfar_labels,
            gfar: gfar_value,
            svm_c: svm_params.map(|(c, _)| c),
            svm_gamma: svm_params.map(|(_, g)| g),
        });
        det_no_attack.push(det_curve(&fused_genuine, &fused_impostor).map_err(&wrap)?);
        det_by_combination.push(combo_curves);
    }
    Ok(RunOutput {
        records,
        det_no_attack,
        det_by_combination,
    })
}

/// Evaluate every configured rule over the given (train, test) runs:
/// normalize on the training split, train, fix the threshold at the FRR
/// budget, measure FAR, per-combination SFAR on rewritten test sets, GFAR,
/// and aggregate means, deviations and averaged DET curves across runs.
pub fn evaluate_security<F: Real + Serialize>(
    config: &ExperimentConfig<F>,
    runs: &[(ScoreDataset<F>, ScoreDataset<F>)],
) -> Result<EvalReport<F>> {
    evaluate_security_with(config, runs, &ScenarioRegistry::builtin())
}

/// As [`evaluate_security`], resolving scenario names against a caller
/// registry (merged over the built-in presets).
pub fn evaluate_security_with<F: Real + Serialize>(
    config: &ExperimentConfig<F>,
    runs: &[(ScoreDataset<F>, ScoreDataset<F>)],
    registry: &ScenarioRegistry<F>,
) -> Result<EvalReport<F>> {
    let resolved = config.resolve(registry)?;
    if runs.is_empty() {
        return Err(Error::Config {
            message: "no (train, test) runs supplied".to_string(),
        });
    }

    let outputs: Vec<RunOutput<F>> = runs
        .par_iter()
        .enumerate()
        .map(|(run, (train, test))| evaluate_run(config, &resolved, run, train, test))
        .collect::<Result<Vec<_>>>()?;

    let grid = frr_grid_default::<F>();
    let mut rules = BTreeMap::new();
    for (rule_index, &rule) in config.rules.iter().enumerate() {
        let records: Vec<RunRecord<F>> = outputs
            .iter()
            .map(|o| o.records[rule_index].clone())
            .collect();
        let collect_stat = |get: &dyn Fn(&RunRecord<F>) -> F| {
            stat_of(&records.iter().map(get).collect::<Vec<F>>())
        };
        let mut sfar = BTreeMap::new();
        for label in records[0].sfar.keys() {
            let values: Vec<F> = records.iter().map(|r| r.sfar[label]).collect();
            sfar.insert(label.clone(), stat_of(&values));
        }
        let gfar_stat = if records[0].gfar.is_some() {
            let values: Vec<F> = records.iter().map(|r| r.gfar.unwrap()).collect();
            Some(stat_of(&values))
        } else {
            None
        };

        let no_attack_curves: Vec<DetCurve<F>> = outputs
            .iter()
            .map(|o| o.det_no_attack[rule_index].clone())
            .collect();
        let averaged = average_det(&no_attack_curves, &grid)?;
        let det_no_attack = CurveOnGrid {
            frr: grid.clone(),
            far: averaged.points.iter().map(|p| p.far).collect(),
        };
        let mut det_by_combination = BTreeMap::new();
        for (combo_index, combo) in resolved.combinations.iter().enumerate() {
            let curves: Vec<DetCurve<F>> = outputs
                .iter()
                .map(|o| o.det_by_combination[rule_index][combo_index].clone())
                .collect();
            let averaged = average_det(&curves, &grid)?;
            det_by_combination.insert(
                combo.label(),
                CurveOnGrid {
                    frr: grid.clone(),
                    far: averaged.points.iter().map(|p| p.far).collect(),
                },
            );
        }

        rules.insert(
            rule.name().to_string(),
            RuleReport {
                threshold: collect_stat(&|r| r.threshold),
                frr: collect_stat(&|r| r.frr),
                far: collect_stat(&|r| r.far),
                sfar,
                gfar: gfar_stat,
                det_no_attack,
                det_by_combination,
                runs: records,
            },
        );
    }

    let combinations: Vec<String> = resolved.combinations.iter().map(|c| c.label()).collect();
    let summary_csv = summary_table(&rules, &combinations);
    Ok(EvalReport {
        config_hash: config.hash(),
        seed: config.seed,
        frr_max: config.frr_max,
        n_matchers: config.bounds.len(),
        n_runs: runs.len(),
        prior: resolved.prior.clone(),
        combinations,
        rules,
        summary_csv,
        bands: None,
    })
}

fn summary_table<F: Real>(
    rules: &BTreeMap<String, RuleReport<F>>,
    combinations: &[String],
) -> String {
    let ordered: Vec<&String> = rules.keys().collect();
    let mut out = String::from("metric");
    for name in &ordered {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    let cell = |s: &Stat<F>| format!("{:.2}+-{:.2}", to_f64(s.mean) * 100.0, to_f64(s.std) * 100.0);
    let mut push_row = |label: &str, get: &dyn Fn(&RuleReport<F>) -> Option<Stat<F>>| {
        out.push_str(label);
        for name in &ordered {
            out.push(',');
            match get(&rules[*name]) {
                Some(stat) => out.push_str(&cell(&stat)),
                None => out.push('-'),
            }
        }
        out.push('\n');
    };
    push_row("frr", &|r| Some(r.frr));
    push_row("far", &|r| Some(r.far));
    for combo in combinations {
        push_row(&format!("sfar[{combo}]"), &|r| r.sfar.get(combo).copied());
    }
    push_row("gfar", &|r| r.gfar);
    out
}

/// Per-rule, per-matcher uncertainty bands on the first run's test split.
pub fn evaluate_bands<F: Real>(
    config: &ExperimentConfig<F>,
    runs: &[(ScoreDataset<F>, ScoreDataset<F>)],
    registry: &ScenarioRegistry<F>,
) -> Result<BTreeMap<String, Vec<BandReport<F>>>> {
    let resolved = config.resolve(registry)?;
    let (train_raw, test_raw) = runs.first().ok_or_else(|| Error::Config {
        message: "no (train, test) runs supplied".to_string(),
    })?;
    let (train, mut others) = minmax_normalize(train_raw, &[test_raw])?;
    let test = others.pop().expect("one normalized set");

    let grid_scenarios = uncertainty_grid::<F>(config.grid_n, config.seed);
    let mut known = Vec::new();
    if config.band.include_known {
        known.extend(registry.iter().cloned());
        let (best, worst) = limit_scenarios::<F>();
        known.push(best);
        known.push(worst);
    }
    let frr_grid = frr_grid_default::<F>();
    let buckets = impact_buckets_default::<F>();

    let mut out = BTreeMap::new();
    for &rule in &config.rules {
        let (trained, _) = train_rule(rule, &train, &resolved, config, 0)
            .map_err(annotate::<F>(rule, 0))?;
        let reports = (0..config.bounds.len())
            .into_par_iter()
            .map(|matcher| {
                matcher_band(
                    &test,
                    &trained,
                    matcher,
                    &grid_scenarios,
                    &known,
                    &config.bounds,
                    &frr_grid,
                    &buckets,
                    config.band.method,
                    config.seed,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        out.insert(rule.name().to_string(), reports);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Rule selection
// ---------------------------------------------------------------------------

/// Selection criterion: the FRR budget and the attack prior defining GFAR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "F: Real + Serialize",
    deserialize = "F: Real + serde::de::DeserializeOwned"
))]
pub struct SelectionCriterion<F: Real> {
    pub frr_max: F,
    pub prior: MixturePrior<F>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedRule<F> {
    pub rule: String,
    pub gfar: Stat<F>,
    pub far: Stat<F>,
    pub frr: Stat<F>,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "F: Real + Serialize",
    deserialize = "F: Real + serde::de::DeserializeOwned"
))]
pub struct SelectionReport<F: Real> {
    pub selected: String,
    pub frr_max: F,
    pub ranking: Vec<RankedRule<F>>,
}

/// Pick the rule minimizing the criterion GFAR among rules whose achieved
/// FRR stays within budget; ties break by lower FAR, then rule name.
///
/// GFAR is recomputed per run from the stored FAR/SFAR parts under the
/// criterion's prior, so the criterion may differ from the evaluation prior.
pub fn select_rule<F: Real>(
    reports: &[EvalReport<F>],
    criterion: &SelectionCriterion<F>,
) -> Result<SelectionReport<F>> {
    if reports.is_empty() {
        return Err(Error::Config {
            message: "no reports to select from".to_string(),
        });
    }
    let mut ranking: Vec<RankedRule<F>> = Vec::new();
    for (index, report) in reports.iter().enumerate() {
        if (to_f64(report.frr_max) - to_f64(criterion.frr_max)).abs() > 1e-12 {
            return Err(Error::Config {
                message: format!(
                    "report {index} was evaluated at frr_max={}, criterion wants {}",
                    report.frr_max, criterion.frr_max
                ),
            });
        }
        for (name, rule) in &report.rules {
            let mut gfars = Vec::with_capacity(rule.runs.len());
            for record in &rule.runs {
                let mut total = criterion.prior.zero_effort_weight() * record.far;
                for (combo, weight) in criterion.prior.attack_support() {
                    let sfar = record.sfar.get(&combo.label()).ok_or_else(|| {
                        Error::PriorMissingCombination {
                            combination: combo.label(),
                        }
                    })?;
                    total = total + weight * *sfar;
                }
                gfars.push(total);
            }
            let qualified = if reports.len() > 1 {
                format!("{name}#{index}")
            } else {
                name.clone()
            };
            ranking.push(RankedRule {
                rule: qualified,
                gfar: stat_of(&gfars),
                far: rule.far,
                frr: rule.frr,
                feasible: to_f64(rule.frr.mean) <= to_f64(criterion.frr_max) + 1e-12,
            });
        }
    }
    ranking.sort_by(|a, b| {
        to_f64(a.gfar.mean)
            .partial_cmp(&to_f64(b.gfar.mean))
            .unwrap()
            .then(to_f64(a.far.mean).partial_cmp(&to_f64(b.far.mean)).unwrap())
            .then(a.rule.cmp(&b.rule))
    });
    let selected = ranking
        .iter()
        .find(|r| r.feasible)
        .map(|r| r.rule.clone())
        .ok_or(Error::NoFeasibleRule {
            frr_max: to_f64(criterion.frr_max),
        })?;
    Ok(SelectionReport {
        selected,
        frr_max: criterion.frr_max,
        ranking,
    })
}
