use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("inverse metric has a non-finite entry")]
    NonFiniteMetric,
    #[error("inverse metric signature is not (-,+,+,+): {negative} negative and {zero} zero eigenvalues")]
    BadSignature { negative: usize, zero: usize },
    #[error("metric derivative has a non-finite entry")]
    NonFiniteDerivative,
    #[error("metric is singular (condition number {condition:e})")]
    SingularMetric { condition: f64 },
    #[error("momentum is not timelike (g^{{μν}} p_μ p_ν = {norm})")]
    NotTimelike { norm: f64 },
    #[error("operation requires a non-zero mass")]
    MasslessProjection,
    #[error("φ is not transverse to the flow (m²c² = {mass_sq_c2})")]
    TransversalityFailure { mass_sq_c2: f64 },
    #[error("state has a non-finite component")]
    NonFiniteState,
    #[error("step size underflow at λ = {lambda} (step {step:e})")]
    StepSizeUnderflow { lambda: f64, step: f64 },
    #[error("maximum number of steps ({max_steps}) exceeded")]
    MaxStepsExceeded { max_steps: usize },
    #[error("φ increased along a massive on-shell flow at λ = {lambda}")]
    PhiNotDecreasing { lambda: f64 },
    #[error("reparametrization variable is not strictly monotone")]
    NotMonotone,
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("at least one stop condition is required")]
    NoStopCondition,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("operation requires a φ-independent metric")]
    PhiDependentMetric,
    #[error("four-velocity is not normalized (g_{{μν}} u^μ u^ν = {norm}, expected {expected})")]
    NotNormalized { norm: f64, expected: f64 },
    #[error("ensemble must contain at least one marker")]
    EmptyEnsemble,
    #[error("initial density cannot be normalized: {0}")]
    UnnormalizableSpec(String),
    #[error("marker {index} has non-positive density {value}")]
    NonPositiveDensity { index: usize, value: f64 },
}
