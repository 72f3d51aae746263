//! Soft-margin RBF-kernel SVM trained by sequential pairwise optimization.
//!
//! Solves the dual
//! `min_a 1/2 a' Q a - e' a` s.t. `0 <= a_i <= C`, `y' a = 0`,
//! with `Q_ij = y_i y_j k(x_i, x_j)` and `k(x, x') = exp(-gamma ||x - x'||^2)`,
//! by repeatedly optimizing a maximal-violating pair (second-order working
//! set selection, shrinking disabled). The kernel matrix is precomputed;
//! problems here are desk-scale score tables, not image corpora.

use serde::{Deserialize, Serialize};

use crate::data::{Label, ScoreDataset};
use crate::error::{Error, Result};
use crate::scalar::{real, to_f64, Real};

/// Cap on pair updates before reporting non-convergence.
pub const MAX_PAIR_UPDATES: usize = 1_000_000;

/// Trained kernel rule: support vectors, signed dual coefficients
/// (`alpha_i y_i`), bias, and the hyperparameters that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelModel<F> {
    pub support_vectors: Vec<Vec<F>>,
    pub dual_coefs: Vec<F>,
    pub bias: F,
    pub gamma: F,
    pub c: F,
    /// Final KKT violation of the dual at the returned solution.
    pub kkt_residual: F,
    pub pair_updates: usize,
}

impl<F: Real> KernelModel<F> {
    /// Decision value `sum_i coef_i k(s, sv_i) + b`.
    pub fn decision(&self, s: &[F]) -> F {
        let mut acc = self.bias;
        for (sv, &coef) in self.support_vectors.iter().zip(&self.dual_coefs) {
            acc = acc + coef * rbf(s, sv, self.gamma);
        }
        acc
    }

    /// Dual objective `sum alpha - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij`,
    /// recomputed from the stored support vectors.
    pub fn dual_objective(&self) -> F {
        let linear: F = self.dual_coefs.iter().map(|&c| c.abs()).sum();
        let mut quad = F::zero();
        for (i, (svi, &ci)) in self
            .support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .enumerate()
        {
            for (svj, &cj) in self.support_vectors.iter().zip(&self.dual_coefs).skip(i + 1) {
                quad = quad + real::<F>(2.0) * ci * cj * rbf(svi, svj, self.gamma);
            }
            quad = quad + ci * ci * rbf(svi, svi, self.gamma);
        }
        linear - real::<F>(0.5) * quad
    }
}

#[inline]
fn rbf<F: Real>(a: &[F], b: &[F], gamma: F) -> F {
    let mut d2 = F::zero();
    for (&x, &y) in a.iter().zip(b) {
        let d = x - y;
        d2 = d2 + d * d;
    }
    (-gamma * d2).exp()
}

/// Row-major pairwise squared distances.
pub(crate) fn squared_distances<F: Real>(rows: &[Vec<F>]) -> Vec<F> {
    let n = rows.len();
    let mut out = vec![F::zero(); n * n];
    for i in 0..n {
        for j in i + 1..n {
            let mut d2 = F::zero();
            for (&x, &y) in rows[i].iter().zip(&rows[j]) {
                let d = x - y;
                d2 = d2 + d * d;
            }
            out[i * n + j] = d2;
            out[j * n + i] = d2;
        }
    }
    out
}

pub(crate) fn kernel_from_sqdist<F: Real>(sqdist: &[F], gamma: F) -> Vec<F> {
    sqdist.iter().map(|&d2| (-gamma * d2).exp()).collect()
}

#[derive(Debug)]
pub(crate) struct SmoSolution<F> {
    pub alphas: Vec<F>,
    pub bias: F,
    pub residual: F,
    pub pair_updates: usize,
}

/// Pairwise dual ascent to KKT tolerance `tol`.
///
/// `kernel` is the full row-major kernel matrix; `labels` are +1/-1.
pub(crate) fn smo_solve<F: Real>(
    kernel: &[F],
    labels: &[F],
    c: F,
    tol: F,
    max_updates: usize,
) -> Result<SmoSolution<F>> {
    let n = labels.len();
    debug_assert_eq!(kernel.len(), n * n);
    let tau = real::<F>(1e-12);

    let mut alpha = vec![F::zero(); n];
    // gradient of the dual objective; -e at alpha = 0
    let mut grad = vec![-F::one(); n];

    let is_up = |t: usize, alpha: &[F]| {
        (labels[t] > F::zero() && alpha[t] < c) || (labels[t] < F::zero() && alpha[t] > F::zero())
    };
    let is_low = |t: usize, alpha: &[F]| {
        (labels[t] > F::zero() && alpha[t] > F::zero()) || (labels[t] < F::zero() && alpha[t] < c)
    };

    let mut updates = 0usize;
    let residual = loop {
        // working set selection: i maximizes -y G over the "up" set; j is the
        // second-order best violator in the "low" set
        let mut gmax = F::neg_infinity();
        let mut i = usize::MAX;
        for t in 0..n {
            if is_up(t, &alpha) {
                let v = -labels[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        let mut gmax2 = F::neg_infinity();
        let mut j = usize::MAX;
        let mut best_obj = F::infinity();
        if i != usize::MAX {
            let row_i = &kernel[i * n..(i + 1) * n];
            let kii = row_i[i];
            for t in 0..n {
                if is_low(t, &alpha) {
                    let v = labels[t] * grad[t];
                    if v > gmax2 {
                        gmax2 = v;
                    }
                    let grad_diff = gmax + v;
                    if grad_diff > F::zero() {
                        let quad =
                            (kii + kernel[t * n + t] - real::<F>(2.0) * labels[i] * labels[t] * row_i[t])
                                .max(tau);
                        let obj = -(grad_diff * grad_diff) / quad;
                        if obj < best_obj {
                            best_obj = obj;
                            j = t;
                        }
                    }
                }
            }
        }

        let violation = if i == usize::MAX || gmax2 == F::neg_infinity() {
            F::zero()
        } else {
            gmax + gmax2
        };
        if violation <= tol || j == usize::MAX {
            break violation.max(F::zero());
        }
        if updates >= max_updates {
            return Err(Error::SvmNonConvergence {
                iterations: updates,
                residual: to_f64(violation),
            });
        }
        updates += 1;

        // analytic two-variable update (pairwise step)
        let row_i = &kernel[i * n..(i + 1) * n];
        let row_j = &kernel[j * n..(j + 1) * n];
        let old_ai = alpha[i];
        let old_aj = alpha[j];

        if labels[i] != labels[j] {
            let quad = (row_i[i] + row_j[j] + real::<F>(2.0) * row_i[j]).max(tau);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] = alpha[i] + delta;
            alpha[j] = alpha[j] + delta;
            if diff > F::zero() {
                if alpha[j] < F::zero() {
                    alpha[j] = F::zero();
                    alpha[i] = diff;
                }
            } else if alpha[i] < F::zero() {
                alpha[i] = F::zero();
                alpha[j] = -diff;
            }
            if diff > F::zero() {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (row_i[i] + row_j[j] - real::<F>(2.0) * row_i[j]).max(tau);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] = alpha[i] - delta;
            alpha[j] = alpha[j] + delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < F::zero() {
                alpha[j] = F::zero();
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < F::zero() {
                alpha[i] = F::zero();
                alpha[j] = sum;
            }
        }

        let ci = labels[i] * (alpha[i] - old_ai);
        let cj = labels[j] * (alpha[j] - old_aj);
        for t in 0..n {
            grad[t] = grad[t] + labels[t] * (ci * row_i[t] + cj * row_j[t]);
        }
    };

    // bias from the free vectors, else the midpoint of the KKT interval
    let mut free_sum = F::zero();
    let mut free_count = 0usize;
    for t in 0..n {
        if alpha[t] > F::zero() && alpha[t] < c {
            free_sum = free_sum + -labels[t] * grad[t];
            free_count += 1;
        }
    }
    let bias = if free_count > 0 {
        free_sum / real::<F>(free_count as f64)
    } else {
        let mut up = F::neg_infinity();
        let mut low = F::infinity();
        for t in 0..n {
            let v = -labels[t] * grad[t];
            if is_up(t, &alpha) {
                up = up.max(v);
            }
            if is_low(t, &alpha) {
                low = low.min(v);
            }
        }
        (up + low) * real::<F>(0.5)
    };

    Ok(SmoSolution {
        alphas: alpha,
        bias,
        residual,
        pair_updates: updates,
    })
}

pub(crate) fn class_labels<F: Real>(dataset: &ScoreDataset<F>) -> (Vec<Vec<F>>, Vec<F>) {
    let rows: Vec<Vec<F>> = dataset.samples().iter().map(|s| s.scores.clone()).collect();
    let labels: Vec<F> = dataset
        .samples()
        .iter()
        .map(|s| match s.label {
            Label::Genuine => F::one(),
            Label::Impostor => -F::one(),
        })
        .collect();
    (rows, labels)
}

pub(crate) fn model_from_solution<F: Real>(
    rows: &[Vec<F>],
    labels: &[F],
    solution: SmoSolution<F>,
    c: F,
    gamma: F,
) -> KernelModel<F> {
    let mut support_vectors = Vec::new();
    let mut dual_coefs = Vec::new();
    for ((row, &y), &a) in rows.iter().zip(labels).zip(&solution.alphas) {
        if a > F::zero() {
            support_vectors.push(row.clone());
            dual_coefs.push(a * y);
        }
    }
    KernelModel {
        support_vectors,
        dual_coefs,
        bias: solution.bias,
        gamma,
        c,
        kkt_residual: solution.residual,
        pair_updates: solution.pair_updates,
    }
}

/// Train an RBF-kernel SVM on the dataset (genuine = +1, impostor = -1).
pub fn train_svm_rbf<F: Real>(
    dataset: &ScoreDataset<F>,
    c: F,
    gamma: F,
    tol: F,
) -> Result<KernelModel<F>> {
    dataset.validate()?;
    if c <= F::zero() || gamma <= F::zero() || tol <= F::zero() {
        return Err(Error::Config {
            message: format!("svm parameters must be positive: C={c}, gamma={gamma}, tol={tol}"),
        });
    }
    let (rows, labels) = class_labels(dataset);
    let kernel = kernel_from_sqdist(&squared_distances(&rows), gamma);
    let solution = smo_solve(&kernel, &labels, c, tol, MAX_PAIR_UPDATES)?;
    Ok(model_from_solution(&rows, &labels, solution, c, gamma))
}
