//! Crate-wide error type.

use thiserror::Error;

/// Coarse classification used by callers that map failures to process exit
/// codes: bad inputs vs. numeric breakdowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed or inconsistent input (data, configuration, file contents).
    Validation,
    /// A numeric procedure failed (degenerate fit, non-convergence, ...).
    Numeric,
    /// Underlying I/O failure.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    // ---- data & configuration validation ----
    #[error("sample {index}: expected {expected} scores, found {found}")]
    SampleArity {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("sample {index}: score {matcher} is not finite")]
    NonFiniteScore { index: usize, matcher: usize },
    #[error("dataset has no {class} samples")]
    MissingClass { class: &'static str },
    #[error("dataset has no samples")]
    EmptyDataset,
    #[error("attack bounds must be non-empty with every u_i >= 1")]
    BadAttackBounds,
    #[error("attack level {level} at matcher {matcher} exceeds bound {bound}")]
    AttackLevelOutOfRange {
        matcher: usize,
        level: u32,
        bound: u32,
    },
    #[error("attack combination has {levels} levels but {bounds} bounds")]
    AttackArityMismatch { levels: usize, bounds: usize },
    #[error("prior weight for combination {combination} is negative ({weight})")]
    NegativePriorWeight { combination: String, weight: f64 },
    #[error("prior weights sum to {sum}, expected 1 within {tolerance}")]
    PriorSum { sum: f64, tolerance: f64 },
    #[error("prior is missing combination {combination}")]
    PriorMissingCombination { combination: String },
    #[error("prior contains unexpected combination {combination}")]
    PriorExtraCombination { combination: String },
    #[error("{context}: value {value} outside [{low}, {high}]")]
    OutOfRange {
        context: &'static str,
        value: f64,
        low: f64,
        high: f64,
    },
    #[error("spoof plan: {message}")]
    BadSpoofPlan { message: String },
    #[error("no scenario configured for matcher {matcher} at attack level {level}")]
    MissingScenario { matcher: usize, level: u32 },
    #[error("configuration: {message}")]
    Config { message: String },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    // ---- numeric failures ----
    #[error("infeasible beta parameters: mu={mu}, sigma={sigma} (need 0<mu<1, 0<sigma<sqrt(mu(1-mu)))")]
    InfeasibleBeta { mu: f64, sigma: f64 },
    #[error("genuine and impostor pools have indistinguishable means; mixing coefficient is undefined")]
    DegeneratePools,
    #[error("pool '{name}' needs at least {min} values, found {found}")]
    PoolTooSmall {
        name: &'static str,
        min: usize,
        found: usize,
    },
    #[error("gamma fit: {message}")]
    GammaFit { message: String },
    #[error("class means coincide; discriminant direction is undefined")]
    DegenerateClasses,
    #[error("within-class scatter is singular even after regularization")]
    SingularScatter,
    #[error("solver did not converge after {iterations} pair updates (KKT residual {residual})")]
    SvmNonConvergence { iterations: usize, residual: f64 },
    #[error("matcher {matcher} is constant on the training set; min-max map is undefined")]
    ConstantColumn { matcher: usize },
    #[error("cross-validation fold {fold} is missing the {class} class")]
    FoldMissingClass { fold: usize, class: &'static str },
    #[error("no rule satisfies FRR <= {frr_max}")]
    NoFeasibleRule { frr_max: f64 },
    #[error("not enough clients to split: {clients} clients with train fraction {fraction}")]
    TooFewClients { clients: usize, fraction: f64 },

    // ---- I/O ----
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    /// Failure annotated with the (rule, run) cell it occurred in.
    #[error("rule {rule}, run {run}: {source}")]
    Context {
        rule: String,
        run: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            SampleArity { .. }
            | NonFiniteScore { .. }
            | MissingClass { .. }
            | EmptyDataset
            | BadAttackBounds
            | AttackLevelOutOfRange { .. }
            | AttackArityMismatch { .. }
            | NegativePriorWeight { .. }
            | PriorSum { .. }
            | PriorMissingCombination { .. }
            | PriorExtraCombination { .. }
            | OutOfRange { .. }
            | BadSpoofPlan { .. }
            | MissingScenario { .. }
            | Config { .. }
            | Parse { .. } => ErrorKind::Validation,
            InfeasibleBeta { .. }
            | DegeneratePools
            | PoolTooSmall { .. }
            | GammaFit { .. }
            | DegenerateClasses
            | SingularScatter
            | SvmNonConvergence { .. }
            | ConstantColumn { .. }
            | FoldMissingClass { .. }
            | NoFeasibleRule { .. }
            | TooFewClients { .. } => ErrorKind::Numeric,
            Io { .. } | Json(_) => ErrorKind::Io,
            Context { source, .. } => source.kind(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
