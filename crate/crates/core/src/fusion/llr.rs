//! Likelihood-ratio fusion with per-matcher Gamma class densities.
//!
//! Matcher scores are assumed independent given the class, so the
//! log-likelihood ratio is the sum of per-matcher log density ratios. The
//! log-domain form is a strictly increasing transform of the plain ratio and
//! yields identical rankings, hence identical DET curves.

use serde::{Deserialize, Serialize};

use crate::data::{Label, ScoreDataset};
use crate::error::Result;
use crate::fusion::gamma::{fit_gamma, GammaFit};
use crate::scalar::Real;

/// Genuine/impostor density pair of one matcher.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatcherDensities<F> {
    pub genuine: GammaFit<F>,
    pub impostor: GammaFit<F>,
}

/// Per-matcher Gamma fits for both classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlrModel<F> {
    pub matchers: Vec<MatcherDensities<F>>,
}

impl<F: Real> LlrModel<F> {
    pub fn n_matchers(&self) -> usize {
        self.matchers.len()
    }

    /// Sum of genuine log densities.
    pub fn log_genuine(&self, s: &[F]) -> F {
        self.matchers
            .iter()
            .zip(s)
            .map(|(m, &x)| m.genuine.log_pdf(x))
            .sum()
    }

    /// Sum of impostor log densities.
    pub fn log_impostor(&self, s: &[F]) -> F {
        self.matchers
            .iter()
            .zip(s)
            .map(|(m, &x)| m.impostor.log_pdf(x))
            .sum()
    }
}

/// Fit per-matcher Gamma densities for both classes.
pub fn train_llr<F: Real>(dataset: &ScoreDataset<F>) -> Result<LlrModel<F>> {
    dataset.validate()?;
    let mut matchers = Vec::with_capacity(dataset.n_matchers());
    for m in 0..dataset.n_matchers() {
        let genuine = fit_gamma(&dataset.class_scores(m, Label::Genuine))?;
        let impostor = fit_gamma(&dataset.class_scores(m, Label::Impostor))?;
        matchers.push(MatcherDensities { genuine, impostor });
    }
    Ok(LlrModel { matchers })
}

/// Log-likelihood-ratio fused score.
pub fn fuse_llr<F: Real>(model: &LlrModel<F>, s: &[F]) -> F {
    model.log_genuine(s) - model.log_impostor(s)
}
