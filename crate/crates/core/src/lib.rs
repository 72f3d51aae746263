//! Simulation and security evaluation of multibiometric score-level fusion
//! under presentation attacks.
//!
//! The crate works purely on matching scores: it simulates the score
//! distributions of fake traits as a Beta-weighted mixing of the genuine and
//! impostor pools, rewrites datasets accordingly, trains standard and
//! attack-aware fusion rules, and evaluates FRR/FAR/SFAR/GFAR operating
//! points, DET curves and impact-sorted uncertainty bands — no biometric
//! images or matchers required.
//!
//! The numeric core is generic over the scalar type via [`scalar::Real`]
//! (`f32` or `f64`); the aliases at the crate root fix `f64`, which all
//! stated accuracy contracts assume.

pub mod attack;
pub mod beta;
pub mod data;
pub mod error;
pub mod fusion;
pub mod harness;
pub mod metrics;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod special;

pub use error::{Error, ErrorKind, Result};
pub use scalar::Real;

// ---------------------------------------------------------------------------
// Concrete aliases at the default (f64) precision.
// ---------------------------------------------------------------------------

pub type ScoreDataset64 = data::ScoreDataset<f64>;
pub type Sample64 = data::Sample<f64>;
pub type MixturePrior64 = attack::MixturePrior<f64>;
pub type BetaMeanStd64 = beta::BetaMeanStd<f64>;
pub type BetaShape64 = beta::BetaShape<f64>;
pub type AttackScenario64 = beta::AttackScenario<f64>;
pub type ScenarioRegistry64 = beta::ScenarioRegistry<f64>;
pub type SpoofPlan64 = sim::SpoofPlan<f64>;
pub type ScenarioAssignment64 = sim::ScenarioAssignment<f64>;
pub type DetCurve64 = metrics::DetCurve<f64>;
pub type ConfidenceBand64 = metrics::ConfidenceBand<f64>;
pub type LlrModel64 = fusion::LlrModel<f64>;
pub type SecureLlrModel64 = fusion::SecureLlrModel<f64>;
pub type LdaModel64 = fusion::LdaModel<f64>;
pub type KernelModel64 = fusion::KernelModel<f64>;
pub type GammaFit64 = fusion::GammaFit<f64>;
pub type TrainedRule64 = fusion::TrainedRule<f64>;
pub type ExperimentConfig64 = harness::ExperimentConfig<f64>;
pub type SyntheticSpec64 = harness::SyntheticSpec<f64>;
pub type EvalReport64 = harness::EvalReport<f64>;
