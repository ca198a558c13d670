//! Error taxonomy shared by all modules.

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of quadrature, model construction, analysis, estimation, and
/// optimization.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Adaptive quadrature exhausted its subdivision budget before reaching
    /// the requested tolerance.
    #[error("quadrature did not converge after {subdivisions} subdivisions (error estimate {error_estimate:.3e})")]
    NonConvergence {
        subdivisions: u32,
        error_estimate: f64,
    },

    /// The integrand returned NaN or an infinity at an evaluation node.
    #[error("integrand returned a non-finite value at x = {x}")]
    NonFiniteIntegrand { x: f64 },

    /// A density handed to `inverse_cdf` does not integrate to 1.
    #[error("density integrates to {integral} instead of 1")]
    NotNormalized { integral: f64 },

    /// Sample budget smaller than the number of techniques.
    #[error("budget N = {budget} is smaller than the number of techniques n = {n}")]
    BudgetTooSmall { budget: u64, n: usize },

    /// Example id outside 1..=5.
    #[error("unknown example problem id {id}; valid ids are 1..=5")]
    UnknownExample { id: u32 },

    /// Strategy name not present in the registry.
    #[error("unknown alpha strategy `{name}`")]
    UnknownStrategy { name: String },

    /// Interval bounds that are not finite or not increasing.
    #[error("invalid interval [{lo}, {hi}]: bounds must be finite with lo < hi")]
    InvalidInterval { lo: f64, hi: f64 },

    /// Coefficients that are not a valid simplex vector.
    #[error("invalid simplex vector: {reason}")]
    InvalidSimplex { reason: String },

    /// A vector whose length does not match the number of techniques.
    #[error("expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Weighted harmonic/power means require strictly positive values.
    #[error("non-positive value {value} at index {index} where a strictly positive one is required")]
    NonPositiveValue { index: usize, value: f64 },

    /// A technique's expected value differs from the reference integral, so
    /// the unbiased-technique bounds do not apply.
    #[error("technique {index} is biased: mu_i = {mu_i} vs mu = {mu}")]
    BiasedTechnique { index: usize, mu_i: f64, mu: f64 },

    /// The mixture density vanished at a sampled point with f(x) != 0,
    /// which signals a coverage violation.
    #[error("mixture density is zero at sampled x = {x} where f(x) != 0")]
    ZeroMixtureAtSample { x: f64 },

    /// Every per-technique variance is zero; any allocation is optimal.
    #[error("all per-technique variances are zero; any beta is optimal")]
    AllZeroVariance,

    /// The simplex solver stopped before reaching the residual tolerance.
    #[error("solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    DidNotConverge {
        best: Vec<f64>,
        residual: f64,
        iterations: u32,
    },
}
