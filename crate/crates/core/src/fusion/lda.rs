//! Fisher linear discriminant over the K matcher scores.

use serde::{Deserialize, Serialize};

use crate::data::{Label, ScoreDataset};
use crate::error::{Error, Result};
use crate::scalar::{real, to_f64, Real};

/// Linear fusion rule `f(s) = w . s + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel<F> {
    pub weights: Vec<F>,
    pub bias: F,
}

impl<F: Real> LdaModel<F> {
    pub fn fuse(&self, s: &[F]) -> F {
        self.weights
            .iter()
            .zip(s)
            .map(|(&w, &x)| w * x)
            .sum::<F>()
            + self.bias
    }
}

fn class_mean<F: Real>(rows: &[&Vec<F>], k: usize) -> Vec<F> {
    let mut mean = vec![F::zero(); k];
    for row in rows {
        for (m, &x) in row.iter().enumerate() {
            mean[m] = mean[m] + x;
        }
    }
    let n = real::<F>(rows.len() as f64);
    for m in &mut mean {
        *m = *m / n;
    }
    mean
}

fn add_scatter<F: Real>(scatter: &mut [F], rows: &[&Vec<F>], mean: &[F], k: usize) {
    for row in rows {
        for i in 0..k {
            let di = row[i] - mean[i];
            for j in 0..k {
                let dj = row[j] - mean[j];
                scatter[i * k + j] = scatter[i * k + j] + di * dj;
            }
        }
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_dense<F: Real>(matrix: &[F], rhs: &[F], k: usize) -> Option<Vec<F>> {
    let mut a = matrix.to_vec();
    let mut b = rhs.to_vec();
    let scale = a
        .iter()
        .fold(F::zero(), |acc, &x| acc.max(x.abs()))
        .max(F::min_positive_value());
    let tol = scale * real::<F>(1e-12);
    for col in 0..k {
        let mut pivot = col;
        for row in col + 1..k {
            if a[row * k + col].abs() > a[pivot * k + col].abs() {
                pivot = row;
            }
        }
        if a[pivot * k + col].abs() <= tol {
            return None;
        }
        if pivot != col {
            for j in 0..k {
                a.swap(col * k + j, pivot * k + j);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * k + col];
        for row in col + 1..k {
            let factor = a[row * k + col] / diag;
            if factor == F::zero() {
                continue;
            }
            for j in col..k {
                a[row * k + j] = a[row * k + j] - factor * a[col * k + j];
            }
            b[row] = b[row] - factor * b[col];
        }
    }
    let mut x = vec![F::zero(); k];
    for col in (0..k).rev() {
        let mut acc = b[col];
        for j in col + 1..k {
            acc = acc - a[col * k + j] * x[j];
        }
        x[col] = acc / a[col * k + col];
    }
    Some(x)
}

/// Fit the Fisher direction `w` proportional to `S_w^-1 (mean_G - mean_I)`,
/// unit-normalized and oriented so the genuine mean projects higher, with
/// `b = -w . (mean_G + mean_I) / 2`.
///
/// A ridge of `1e-8 trace(S_w) / K` is added when the pooled within-class
/// scatter is singular (perfectly correlated or constant columns).
pub fn train_lda<F: Real>(dataset: &ScoreDataset<F>) -> Result<LdaModel<F>> {
    dataset.validate()?;
    let k = dataset.n_matchers();
    let genuine: Vec<&Vec<F>> = dataset
        .samples()
        .iter()
        .filter(|s| s.label == Label::Genuine)
        .map(|s| &s.scores)
        .collect();
    let impostor: Vec<&Vec<F>> = dataset
        .samples()
        .iter()
        .filter(|s| s.label == Label::Impostor)
        .map(|s| &s.scores)
        .collect();

    let mean_g = class_mean(&genuine, k);
    let mean_i = class_mean(&impostor, k);
    let delta: Vec<F> = mean_g
        .iter()
        .zip(&mean_i)
        .map(|(&g, &i)| g - i)
        .collect();
    let delta_norm = delta.iter().map(|&d| d * d).sum::<F>().sqrt();
    if to_f64(delta_norm) < 1e-12 {
        return Err(Error::DegenerateClasses);
    }

    let mut scatter = vec![F::zero(); k * k];
    add_scatter(&mut scatter, &genuine, &mean_g, k);
    add_scatter(&mut scatter, &impostor, &mean_i, k);

    let solved = solve_dense(&scatter, &delta, k).or_else(|| {
        let trace: F = (0..k).map(|i| scatter[i * k + i]).sum();
        let ridge = real::<F>(1e-8) * trace / real::<F>(k as f64);
        let mut regularized = scatter.clone();
        for i in 0..k {
            regularized[i * k + i] = regularized[i * k + i] + ridge;
        }
        solve_dense(&regularized, &delta, k)
    });
    let mut w = solved.ok_or(Error::SingularScatter)?;

    let norm = w.iter().map(|&x| x * x).sum::<F>().sqrt();
    if norm <= F::zero() || !norm.is_finite() {
        return Err(Error::SingularScatter);
    }
    for x in &mut w {
        *x = *x / norm;
    }
    let project = |mean: &[F]| -> F { w.iter().zip(mean).map(|(&wi, &mi)| wi * mi).sum() };
    if project(&mean_g) < project(&mean_i) {
        for x in &mut w {
            *x = -*x;
        }
    }
    let half = real::<F>(0.5);
    let bias = -w
        .iter()
        .zip(mean_g.iter().zip(&mean_i))
        .map(|(&wi, (&g, &i))| wi * (g + i) * half)
        .sum::<F>();
    Ok(LdaModel { weights: w, bias })
}
