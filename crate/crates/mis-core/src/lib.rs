//! Multiple importance sampling with the generalized balance heuristic.
//!
//! This crate implements the balance-heuristic MIS estimator family in which
//! the coefficients weighting the mixture density (alpha) are decoupled from
//! the coefficients allocating samples to techniques (beta). It provides:
//!
//! - [`quadrature`]: an adaptive 1D Gauss-Legendre oracle used by every
//!   analytic computation,
//! - [`model`]: problems, techniques, simplex coefficients, sample-count
//!   allocation, and the built-in example problems,
//! - [`analysis`]: exact per-technique moments, estimator variances, the
//!   deterministic-vs-randomized variance gap, and variance upper bounds,
//! - [`estimators`]: seeded Monte Carlo estimators (deterministic and
//!   randomized mixtures, constant-weight linear combinations) plus empirical
//!   variance measurement,
//! - [`optimize`]: closed-form optimal allocations, simplex solvers for the
//!   stationarity conditions on alpha, and likelihood-dominance comparators.
//!
//! All analytic results are deterministic; all Monte Carlo results are
//! reproducible from an explicit seed, independent of thread scheduling.

pub mod analysis;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod model;
pub mod optimize;
pub mod quadrature;

pub use analysis::{BoundsReport, MeanKind, MomentTable, SingleTechniqueMoments};
pub use error::{Error, Result};
pub use estimators::{EmpiricalStats, EstimateRun, EstimatorKind, LinearKind, RngSeed};
pub use model::{Allocation, AlphaStrategy, Problem, SimplexVector, Technique};
pub use optimize::{
    DominanceVerdict, Objective, OptimalityResidual, SolveOutcome, SolverConfig,
};
pub use quadrature::{Interval, QuadratureConfig};
