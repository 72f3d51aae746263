//! Hyperparameter selection for the kernel rules by k-fold cross-validation
//! over a (C, gamma) grid.
//!
//! The objective is evaluated per fold at the FRR operating point: either
//! the zero-effort FAR, or — for the attack-aware path — the GFAR, in which
//! case the training folds are first resampled under the attack mixture and
//! the validation fold is spoofed per weighted combination.

use rayon::prelude::*;

use crate::attack::MixturePrior;
use crate::data::{Label, ScoreDataset};
use crate::error::{Error, Result};
use crate::fusion::svm::{
    class_labels, kernel_from_sqdist, model_from_solution, smo_solve, squared_distances,
    MAX_PAIR_UPDATES,
};
use crate::metrics::{error_rates_at, gfar, threshold_for_frr};
use crate::rng::{domain, mix, substream};
use crate::scalar::{to_f64, Real};
use crate::sim::{resample_training_impostors, spoof_dataset, ScenarioAssignment, SpoofPlan};

/// Fold-mean objective minimized by the grid search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionObjective<F> {
    /// Zero-effort FAR at `FRR <= frr_max`.
    FarAtFrr { frr_max: F },
    /// Prior-weighted GFAR at `FRR <= frr_max`; requires a resampler.
    GfarAtFrr { frr_max: F },
}

/// Attack mixture used to resample training folds and to spoof validation
/// folds when selecting under the GFAR objective.
#[derive(Debug, Clone)]
pub struct GfarResampler<'a, F> {
    pub prior: &'a MixturePrior<F>,
    pub scenarios: &'a ScenarioAssignment<F>,
    pub seed: u64,
}

/// Stratified fold assignment: per-class shuffle, then round-robin.
fn stratified_folds<F: Real>(
    dataset: &ScoreDataset<F>,
    folds: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    use rand::seq::SliceRandom;
    let mut assignment = vec![Vec::new(); folds];
    for (class, label) in [("genuine", Label::Genuine), ("impostor", Label::Impostor)] {
        let mut indices: Vec<usize> = dataset
            .samples()
            .iter()
            .enumerate()
            .filter(|(_, s)| s.label == label)
            .map(|(i, _)| i)
            .collect();
        if indices.len() < folds {
            return Err(Error::FoldMissingClass {
                fold: indices.len(),
                class,
            });
        }
        let mut rng = substream(seed, &[domain::CV, label as u64]);
        indices.shuffle(&mut rng);
        for (pos, idx) in indices.into_iter().enumerate() {
            assignment[pos % folds].push(idx);
        }
    }
    for fold in &mut assignment {
        fold.sort_unstable();
    }
    Ok(assignment)
}

fn split_fold<F: Real>(
    dataset: &ScoreDataset<F>,
    fold: &[usize],
) -> (ScoreDataset<F>, ScoreDataset<F>) {
    let in_fold: std::collections::BTreeSet<usize> = fold.iter().copied().collect();
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (i, sample) in dataset.samples().iter().enumerate() {
        if in_fold.contains(&i) {
            val.push(sample.clone());
        } else {
            train.push(sample.clone());
        }
    }
    (
        ScoreDataset::new(dataset.n_matchers(), train),
        ScoreDataset::new(dataset.n_matchers(), val),
    )
}

struct FoldEval<F> {
    /// objective[gamma_index][c_index]
    objective: Vec<Vec<F>>,
}

#[allow(clippy::too_many_arguments)]
fn evaluate_fold<F: Real>(
    dataset: &ScoreDataset<F>,
    fold_index: usize,
    fold: &[usize],
    c_grid: &[F],
    gamma_grid: &[F],
    objective: SelectionObjective<F>,
    resampler: Option<&GfarResampler<'_, F>>,
    tol: F,
) -> Result<FoldEval<F>> {
    let (mut train, val) = split_fold(dataset, fold);
    for (ds, class_of) in [(&train, "train"), (&val, "validation")] {
        for (class, label) in [("genuine", Label::Genuine), ("impostor", Label::Impostor)] {
            if ds.count(label) == 0 {
                let _ = class_of;
                return Err(Error::FoldMissingClass {
                    fold: fold_index,
                    class,
                });
            }
        }
    }

    if let Some(resampler) = resampler {
        train = resample_training_impostors(
            &train,
            resampler.prior,
            resampler.scenarios,
            mix(resampler.seed, &[domain::CV, fold_index as u64]),
        )?;
    }

    let val_genuine: Vec<&[F]> = val
        .samples()
        .iter()
        .filter(|s| s.label == Label::Genuine)
        .map(|s| s.scores.as_slice())
        .collect();
    let val_impostor: Vec<&[F]> = val
        .samples()
        .iter()
        .filter(|s| s.label == Label::Impostor)
        .map(|s| s.scores.as_slice())
        .collect();

    // spoofed validation sets are shared across the grid
    let mut spoofed_sets = Vec::new();
    if let (SelectionObjective::GfarAtFrr { .. }, Some(resampler)) = (objective, resampler) {
        for (combo_index, (combo, _)) in resampler.prior.attack_support().enumerate() {
            let plan = SpoofPlan::from_assignment(combo.clone(), resampler.scenarios)?;
            let spoofed = spoof_dataset(
                &val,
                &plan,
                mix(
                    resampler.seed,
                    &[domain::SPOOF, fold_index as u64, combo_index as u64],
                ),
            )?;
            let rows: Vec<Vec<F>> = spoofed
                .samples()
                .iter()
                .filter(|s| s.label == Label::Impostor)
                .map(|s| s.scores.clone())
                .collect();
            spoofed_sets.push((combo.clone(), rows));
        }
    }

    let (rows, labels) = class_labels(&train);
    let sqdist = squared_distances(&rows);

    let mut fold_objective = vec![vec![F::zero(); c_grid.len()]; gamma_grid.len()];
    for (gi, &gamma) in gamma_grid.iter().enumerate() {
        let kernel = kernel_from_sqdist(&sqdist, gamma);
        for (ci, &c) in c_grid.iter().enumerate() {
            let solution = smo_solve(&kernel, &labels, c, tol, MAX_PAIR_UPDATES)?;
            let model = model_from_solution(&rows, &labels, solution, c, gamma);

            let fused_gen: Vec<F> = val_genuine.iter().map(|s| model.decision(s)).collect();
            let fused_imp: Vec<F> = val_impostor.iter().map(|s| model.decision(s)).collect();
            let value = match objective {
                SelectionObjective::FarAtFrr { frr_max } => {
                    let t = threshold_for_frr(&fused_gen, frr_max)?;
                    let (_, far) = error_rates_at(&fused_gen, &fused_imp, t)?;
                    far
                }
                SelectionObjective::GfarAtFrr { frr_max } => {
                    let resampler = resampler.expect("checked by caller");
                    let t = threshold_for_frr(&fused_gen, frr_max)?;
                    let (_, far) = error_rates_at(&fused_gen, &fused_imp, t)?;
                    let mut sfars = std::collections::BTreeMap::new();
                    for (combo, rows) in &spoofed_sets {
                        let fused: Vec<F> = rows.iter().map(|s| model.decision(s)).collect();
                        let (_, sfar) = error_rates_at(&fused_gen, &fused, t)?;
                        sfars.insert(combo.clone(), sfar);
                    }
                    gfar(far, &sfars, resampler.prior)?
                }
            };
            fold_objective[gi][ci] = value;
        }
    }
    Ok(FoldEval {
        objective: fold_objective,
    })
}

/// Outcome of a grid search: the winner and the full fold-mean table.
#[derive(Debug, Clone)]
pub struct GridSearchOutcome<F> {
    pub selected: (F, F),
    /// `((c, gamma), mean objective)` for every grid cell.
    pub table: Vec<((F, F), F)>,
}

/// Pick the `(C, gamma)` pair minimizing the mean fold objective.
///
/// Ties are broken by smaller `C`, then smaller `gamma`.
pub fn select_hyperparams<F: Real>(
    dataset: &ScoreDataset<F>,
    c_grid: &[F],
    gamma_grid: &[F],
    folds: usize,
    objective: SelectionObjective<F>,
    resampler: Option<&GfarResampler<'_, F>>,
    seed: u64,
) -> Result<(F, F)> {
    Ok(
        select_hyperparams_detailed(dataset, c_grid, gamma_grid, folds, objective, resampler, seed)?
            .selected,
    )
}

/// As [`select_hyperparams`], also returning the per-cell objective table.
pub fn select_hyperparams_detailed<F: Real>(
    dataset: &ScoreDataset<F>,
    c_grid: &[F],
    gamma_grid: &[F],
    folds: usize,
    objective: SelectionObjective<F>,
    resampler: Option<&GfarResampler<'_, F>>,
    seed: u64,
) -> Result<GridSearchOutcome<F>> {
    dataset.validate()?;
    if folds < 2 {
        return Err(Error::Config {
            message: format!("need at least 2 folds, got {folds}"),
        });
    }
    if c_grid.is_empty() || gamma_grid.is_empty() {
        return Err(Error::Config {
            message: "hyperparameter grids must be non-empty".to_string(),
        });
    }
    if matches!(objective, SelectionObjective::GfarAtFrr { .. }) && resampler.is_none() {
        return Err(Error::Config {
            message: "GFAR objective requires a resampler (prior and scenarios)".to_string(),
        });
    }

    let assignment = stratified_folds(dataset, folds, seed)?;
    let tol = F::from_f64(1e-3).expect("tolerance");

    let fold_evals: Vec<FoldEval<F>> = assignment
        .par_iter()
        .enumerate()
        .map(|(fold_index, fold)| {
            evaluate_fold(
                dataset, fold_index, fold, c_grid, gamma_grid, objective, resampler, tol,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    // mean over folds, then argmin with (C, gamma) value-ordered tie-breaking
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut c_order: Vec<usize> = (0..c_grid.len()).collect();
    c_order.sort_by(|&a, &b| to_f64(c_grid[a]).partial_cmp(&to_f64(c_grid[b])).unwrap());
    let mut g_order: Vec<usize> = (0..gamma_grid.len()).collect();
    g_order.sort_by(|&a, &b| {
        to_f64(gamma_grid[a])
            .partial_cmp(&to_f64(gamma_grid[b]))
            .unwrap()
    });
    for &ci in &c_order {
        for &gi in &g_order {
            order.push((ci, gi));
        }
    }

    let mut best: Option<((usize, usize), F)> = None;
    let mut table = Vec::with_capacity(order.len());
    for (ci, gi) in order {
        let mut total = F::zero();
        for eval in &fold_evals {
            total = total + eval.objective[gi][ci];
        }
        let mean = total / F::from_f64(folds as f64).expect("fold count");
        table.push(((c_grid[ci], gamma_grid[gi]), mean));
        match &best {
            Some((_, current)) if mean >= *current => {}
            _ => best = Some(((ci, gi), mean)),
        }
    }
    let ((ci, gi), _) = best.expect("non-empty grid");
    Ok(GridSearchOutcome {
        selected: (c_grid[ci], gamma_grid[gi]),
        table,
    })
}
