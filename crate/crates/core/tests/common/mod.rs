//! Shared oracles for the integration suites: statistics helpers that stay
//! independent of the library's own numeric paths.
#![allow(dead_code)]

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at the 1% level.
pub fn ks_critical_1pct(n: usize, m: usize) -> f64 {
    1.62762 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Pearson chi-square statistic over (observed, expected) cells with
/// positive expectation.
pub fn chi_square(observed: &[f64], expected: &[f64]) -> f64 {
    observed
        .iter()
        .zip(expected)
        .filter(|(_, &e)| e > 0.0)
        .map(|(&o, &e)| (o - e) * (o - e) / e)
        .sum()
}

/// 1% critical values of the chi-square distribution, dof 1..=10.
pub const CHI2_CRIT_1PCT: [f64; 10] = [
    6.63489660102121,
    9.21034037197618,
    11.3448667301444,
    13.2767041359876,
    15.0862724693889,
    16.8118938297709,
    18.4753069065824,
    20.0902350296632,
    21.6659943334619,
    23.2092511589544,
];

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sample_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// Regularized incomplete beta by quadrature of the unnormalized density —
/// the normalization constant comes from the quadrature itself, so this path
/// shares nothing with the library's continued fraction or log-gamma.
pub fn beta_cdf_quadrature(p: f64, q: f64, x: f64) -> f64 {
    let density = move |t: f64| t.powf(p - 1.0) * (1.0 - t).powf(q - 1.0);
    // avoid the endpoint singularities for p, q < 1
    let lo = 1e-12;
    let hi = 1.0 - 1e-12;
    let total = adaptive_simpson(&density, lo, hi, 1e-14);
    if x <= lo {
        return 0.0;
    }
    let part = adaptive_simpson(&density, lo, x.min(hi), 1e-14);
    (part / total).clamp(0.0, 1.0)
}

/// Projected-gradient solver for the SVM dual:
/// maximize `e'a - 1/2 a' Q a` s.t. `0 <= a <= C`, `y'a = 0`.
/// Returns the achieved dual objective.
pub fn qp_dual_oracle(kernel: &[f64], labels: &[f64], c: f64, iterations: usize) -> f64 {
    let n = labels.len();
    // Lipschitz bound on the gradient: Gershgorin row sums of Q
    let mut lip: f64 = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += kernel[i * n + j].abs();
        }
        lip = lip.max(row);
    }
    let step = 1.0 / lip.max(1e-12);

    // project v onto {0 <= a <= C, y'a = 0} by bisection on the multiplier
    let project = |v: &[f64]| -> Vec<f64> {
        let constraint = |lambda: f64| -> f64 {
            v.iter()
                .zip(labels)
                .map(|(&vi, &yi)| yi * (vi - lambda * yi).clamp(0.0, c))
                .sum()
        };
        let (mut lo, mut hi) = (-1e9, 1e9);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if constraint(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let lambda = 0.5 * (lo + hi);
        v.iter()
            .zip(labels)
            .map(|(&vi, &yi)| (vi - lambda * yi).clamp(0.0, c))
            .collect()
    };

    let mut alpha = vec![0.0f64; n];
    for _ in 0..iterations {
        // gradient of the maximization objective: e - Qa
        let mut direction = vec![0.0f64; n];
        for i in 0..n {
            let mut qa = 0.0;
            for j in 0..n {
                qa += labels[i] * labels[j] * kernel[i * n + j] * alpha[j];
            }
            direction[i] = 1.0 - qa;
        }
        let proposal: Vec<f64> = alpha
            .iter()
            .zip(&direction)
            .map(|(&a, &d)| a + step * d)
            .collect();
        alpha = project(&proposal);
    }

    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * labels[i] * labels[j] * kernel[i * n + j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// RBF kernel matrix for the oracle path.
pub fn rbf_kernel_matrix(rows: &[Vec<f64>], gamma: f64) -> Vec<f64> {
    let n = rows.len();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d2: f64 = rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            out[i * n + j] = (-gamma * d2).exp();
        }
    }
    out
}
