//! Score-level fusion rules: fixed combiners, Fisher LDA, likelihood-ratio
//! rules (plain and attack-aware) and RBF-kernel SVMs, plus hyperparameter
//! selection.

pub mod gamma;
pub mod lda;
pub mod llr;
pub mod secure;
pub mod select;
pub mod svm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use gamma::{fit_gamma, fit_gamma_with_offset, GammaFit, DEFAULT_OFFSET};
pub use lda::{train_lda, LdaModel};
pub use llr::{fuse_llr, train_llr, LlrModel, MatcherDensities};
pub use secure::{
    extended_llr_prior, fuse_secure_llr, train_secure_llr, DensityEstimator, FakeDensity,
    GaussianKde, SecureLlrModel, SecureLlrOptions, SecureVariant,
};
pub use select::{
    select_hyperparams, select_hyperparams_detailed, GfarResampler, GridSearchOutcome,
    SelectionObjective,
};
pub use svm::{train_svm_rbf, KernelModel, MAX_PAIR_UPDATES};

use crate::scalar::Real;

/// Untrained combiners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedRule {
    Sum,
    Product,
    Minimum,
}

/// Combine a K-score vector with a fixed rule.
pub fn fuse_fixed<F: Real>(kind: FixedRule, s: &[F]) -> F {
    match kind {
        FixedRule::Sum => s.iter().copied().sum(),
        FixedRule::Product => s.iter().copied().fold(F::one(), |acc, x| acc * x),
        FixedRule::Minimum => s.iter().copied().fold(F::infinity(), F::min),
    }
}

/// Every fusion rule the evaluation harness knows how to train and run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Sum,
    Product,
    Minimum,
    Lda,
    Llr,
    SvmRbf,
    ExtendedLlr,
    UniformLlr,
    AlphaLlr,
    AlphaSvmRbf,
}

impl RuleKind {
    pub const ALL: [RuleKind; 10] = [
        RuleKind::Sum,
        RuleKind::Product,
        RuleKind::Minimum,
        RuleKind::Lda,
        RuleKind::Llr,
        RuleKind::SvmRbf,
        RuleKind::ExtendedLlr,
        RuleKind::UniformLlr,
        RuleKind::AlphaLlr,
        RuleKind::AlphaSvmRbf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleKind::Sum => "sum",
            RuleKind::Product => "product",
            RuleKind::Minimum => "minimum",
            RuleKind::Lda => "lda",
            RuleKind::Llr => "llr",
            RuleKind::SvmRbf => "svm_rbf",
            RuleKind::ExtendedLlr => "extended_llr",
            RuleKind::UniformLlr => "uniform_llr",
            RuleKind::AlphaLlr => "alpha_llr",
            RuleKind::AlphaSvmRbf => "alpha_svm_rbf",
        }
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RuleKind::ALL
            .iter()
            .find(|r| r.name() == s)
            .copied()
            .ok_or_else(|| crate::error::Error::Config {
                message: format!(
                    "unknown rule '{s}'; supported rules: {}",
                    RuleKind::ALL
                        .iter()
                        .map(|r| r.name())
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
            })
    }
}

/// A trained (or fixed) rule mapping a K-score vector to a fused score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
#[serde(bound(
    serialize = "F: Real + Serialize",
    deserialize = "F: Real + serde::de::DeserializeOwned"
))]
pub enum TrainedRule<F: Real> {
    Fixed { kind: FixedRule },
    Lda { model: LdaModel<F> },
    Llr { model: LlrModel<F> },
    SecureLlr { model: SecureLlrModel<F> },
    Svm { model: KernelModel<F> },
}

impl<F: Real> TrainedRule<F> {
    pub fn fuse(&self, s: &[F]) -> F {
        match self {
            TrainedRule::Fixed { kind } => fuse_fixed(*kind, s),
            TrainedRule::Lda { model } => model.fuse(s),
            TrainedRule::Llr { model } => fuse_llr(model, s),
            TrainedRule::SecureLlr { model } => fuse_secure_llr(model, s),
            TrainedRule::Svm { model } => model.decision(s),
        }
    }
}
