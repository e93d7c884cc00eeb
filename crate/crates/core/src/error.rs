use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("hypothesis violated: {bound} requires n > {required}, got n = {n}")]
    HypothesisViolated {
        bound: &'static str,
        required: f64,
        n: f64,
    },

    #[error("Rényi divergence undefined: mixed variance {0} is not positive")]
    DivergenceUndefined(f64),

    #[error("no admissible Rényi order on the grid for n = {n}")]
    NoAdmissibleNu { n: u64 },

    #[error("critical epoch is not positive (k_dot = {0})")]
    NonPositiveKdot(f64),

    #[error("delta must be below 0.5, got {0}")]
    DeltaTooLarge(f64),

    #[error("target infeasible: required n = {required:.4e} exceeds cap {cap:.4e}")]
    InfeasibleTarget { required: f64, cap: f64 },

    #[error("degenerate noisy count n2 = {0} (must exceed 1)")]
    DegenerateCount(f64),

    #[error("need at least 100 samples, got {0}")]
    TooFewSamples(usize),

    #[error("smoothing radius {radius} is below grid spacing {spacing}")]
    RadiusBelowResolution { radius: f64, spacing: f64 },

    #[error("density mass {0} is not normalized within 1e-6")]
    MassNotNormalized(f64),

    #[error("declared Lipschitz constant {declared} is below observed slope {observed}")]
    LipschitzViolated { declared: f64, observed: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("dataset row {row}: {reason}")]
    DatasetRow { row: usize, reason: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
