//! Exact moments, variances, and variance bounds, all via deterministic
//! quadrature.
//!
//! For a problem with integrand `f`, techniques `p_i`, and mixture
//! coefficients `alpha`, define the mixture `psi(x) = sum_k alpha_k p_k(x)`
//! and, per technique,
//!
//! * `mu = ∫ f(x) dx` — the target integral,
//! * `mu_i = ∫_{p_i > 0} f(x) dx` — the expectation of the single-technique
//!   estimator `f/p_i` under `p_i`,
//! * `v_i = ∫_{p_i > 0} f(x)²/p_i(x) dx − mu_i²` — its variance,
//! * `mu'_i = ∫ f(x) p_i(x)/psi(x) dx` — the expectation of `f/psi` under
//!   `p_i`,
//! * `sigma'_i² = ∫ f(x)² p_i(x)/psi(x)² dx − mu'_i²` — its variance.
//!
//! The one-sample deterministic-mixture estimator has variance
//! `V[F¹] = sum_i alpha_i sigma'_i²`; decoupling the count coefficients
//! `beta` from `alpha` gives `V[G¹] = sum_i (alpha_i²/beta_i) sigma'_i²`;
//! drawing the technique index at random instead costs an extra
//! `sum_i alpha_i mu'_i² − mu²` of variance. The variance bounds depend only
//! on `v`, `mu_i`, `mu`, and `alpha`.

use crate::error::{Error, Result};
use crate::exec;
use crate::model::{Problem, SimplexVector};
use crate::quadrature::{integrate, QuadratureConfig};

/// Relative tolerance on `|mu_i - mu|` below which a technique counts as
/// unbiased for [`bounds_unbiased`] and [`generalized_bound`].
pub const UNBIASED_REL_TOL: f64 = 1e-8;

/// The mixture density `psi(x) = sum_k alpha_k p_k(x)`.
pub fn mixture_pdf(problem: &Problem, alpha: &SimplexVector, x: f64) -> f64 {
    debug_assert_eq!(alpha.len(), problem.n());
    problem
        .techniques()
        .iter()
        .zip(alpha.coeffs())
        .map(|(t, &a)| a * t.pdf(x))
        .sum()
}

/// Moments that do not depend on the mixture coefficients.
#[derive(Clone, Debug)]
pub struct SingleTechniqueMoments {
    mu: f64,
    mu_i: Vec<f64>,
    v: Vec<f64>,
}

impl SingleTechniqueMoments {
    /// The target integral `mu`.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Per-technique expectations `mu_i`.
    pub fn mu_i(&self) -> &[f64] {
        &self.mu_i
    }

    /// Per-technique single-sample variances `v_i`.
    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// Number of techniques.
    pub fn n(&self) -> usize {
        self.mu_i.len()
    }
}

/// Computes `mu`, `mu_i`, and `v_i` for every technique.
pub fn single_technique_moments(
    problem: &Problem,
    cfg: &QuadratureConfig,
) -> Result<SingleTechniqueMoments> {
    let n = problem.n();
    // Job 0 is mu; jobs 1..=n are mu_i; jobs n+1..=2n are the raw second
    // moments of f/p_i.
    let values = try_map(2 * n + 1, |k| {
        if k == 0 {
            integrate(|x| problem.integrand(x), problem.domain(), cfg)
        } else if k <= n {
            let t = &problem.techniques()[k - 1];
            integrate(
                |x| if t.pdf(x) > 0.0 { problem.integrand(x) } else { 0.0 },
                problem.domain(),
                cfg,
            )
        } else {
            let t = &problem.techniques()[k - n - 1];
            integrate(
                |x| {
                    let p = t.pdf(x);
                    if p > 0.0 {
                        let f = problem.integrand(x);
                        f * f / p
                    } else {
                        0.0
                    }
                },
                problem.domain(),
                cfg,
            )
        }
    })?;
    let mu = values[0];
    let mu_i = values[1..=n].to_vec();
    let v = (0..n)
        .map(|i| (values[n + 1 + i] - mu_i[i] * mu_i[i]).max(0.0))
        .collect();
    Ok(SingleTechniqueMoments { mu, mu_i, v })
}

/// All moments of a problem at fixed mixture coefficients.
#[derive(Clone, Debug)]
pub struct MomentTable {
    alpha: SimplexVector,
    costs: Vec<f64>,
    mu: f64,
    mu_i: Vec<f64>,
    v: Vec<f64>,
    mu_prime: Vec<f64>,
    sigma_prime_sq: Vec<f64>,
}

impl MomentTable {
    /// The mixture coefficients the table was computed at.
    pub fn alpha(&self) -> &SimplexVector {
        &self.alpha
    }

    /// Per-sample costs copied from the problem.
    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    /// The target integral `mu`.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Per-technique expectations `mu_i` of the single-technique estimators.
    pub fn mu_i(&self) -> &[f64] {
        &self.mu_i
    }

    /// Per-technique single-sample variances `v_i`.
    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// Per-technique expectations `mu'_i` of `f/psi` under `p_i`.
    pub fn mu_prime(&self) -> &[f64] {
        &self.mu_prime
    }

    /// Per-technique variances `sigma'_i²` of `f/psi` under `p_i`.
    pub fn sigma_prime_sq(&self) -> &[f64] {
        &self.sigma_prime_sq
    }

    /// Number of techniques.
    pub fn n(&self) -> usize {
        self.mu_i.len()
    }
}

/// Computes the full moment table at `alpha`.
pub fn moments(
    problem: &Problem,
    alpha: &SimplexVector,
    cfg: &QuadratureConfig,
) -> Result<MomentTable> {
    let base = single_technique_moments(problem, cfg)?;
    moments_with_base(problem, alpha, cfg, &base)
}

/// Computes the full moment table at `alpha`, reusing precomputed
/// coefficient-independent moments.
pub fn moments_with_base(
    problem: &Problem,
    alpha: &SimplexVector,
    cfg: &QuadratureConfig,
    base: &SingleTechniqueMoments,
) -> Result<MomentTable> {
    let n = problem.n();
    if alpha.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: alpha.len(),
        });
    }
    if base.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: base.n(),
        });
    }
    // Jobs 0..n are mu'_i; jobs n..2n are the raw second moments of f/psi
    // under p_i.
    let values = try_map(2 * n, |k| {
        let t = &problem.techniques()[k % n];
        integrate(
            |x| {
                let psi = mixture_pdf(problem, alpha, x);
                if psi <= 0.0 {
                    return 0.0;
                }
                let f = problem.integrand(x);
                if k < n {
                    f * t.pdf(x) / psi
                } else {
                    f * f * t.pdf(x) / (psi * psi)
                }
            },
            problem.domain(),
            cfg,
        )
    })?;
    let mu_prime = values[..n].to_vec();
    let sigma_prime_sq = (0..n)
        .map(|i| (values[n + i] - mu_prime[i] * mu_prime[i]).max(0.0))
        .collect();
    Ok(MomentTable {
        alpha: alpha.clone(),
        costs: problem.costs(),
        mu: base.mu(),
        mu_i: base.mu_i().to_vec(),
        v: base.v().to_vec(),
        mu_prime,
        sigma_prime_sq,
    })
}

/// Runs `n` fallible jobs through the execution shim, keeping index order.
fn try_map(n: usize, job: impl Fn(usize) -> Result<f64> + Send + Sync) -> Result<Vec<f64>> {
    exec::map_indexed(n, job).into_iter().collect()
}

/// Variance of the one-sample deterministic-mixture estimator at
/// `beta = alpha`: `V[F¹] = sum_i alpha_i sigma'_i²`.
pub fn variance_f1(table: &MomentTable) -> f64 {
    table
        .alpha
        .coeffs()
        .iter()
        .zip(&table.sigma_prime_sq)
        .map(|(&a, &s)| a * s)
        .sum()
}

/// Variance of the one-sample estimator with count coefficients `beta`
/// decoupled from the mixture coefficients:
/// `V[G¹] = sum_i (alpha_i²/beta_i) sigma'_i²`.
pub fn variance_g1(table: &MomentTable, beta: &SimplexVector) -> Result<f64> {
    if beta.len() != table.n() {
        return Err(Error::DimensionMismatch {
            expected: table.n(),
            got: beta.len(),
        });
    }
    Ok(table
        .alpha
        .coeffs()
        .iter()
        .zip(&table.sigma_prime_sq)
        .zip(beta.coeffs())
        .map(|((&a, &s), &b)| a * a * s / b)
        .sum())
}

/// Extra variance paid for drawing the technique index at random instead of
/// deterministically: `V[randomized F¹] − V[F¹] = sum_i alpha_i mu'_i² − mu²`.
///
/// Nonnegative, and at most `(n−1) mu²` when `alpha` is uniform.
pub fn variance_gap(table: &MomentTable) -> f64 {
    let s: f64 = table
        .alpha
        .coeffs()
        .iter()
        .zip(&table.mu_prime)
        .map(|(&a, &m)| a * m * m)
        .sum();
    s - table.mu * table.mu
}

/// Cost-weighted inverse efficiency of the one-sample estimator:
/// `(sum_i beta_i c_i) · V[G¹]`. With `beta = alpha` this is the
/// balance-heuristic inverse efficiency `(sum_i alpha_i c_i) · V[F¹]`.
pub fn inverse_efficiency(table: &MomentTable, beta: &SimplexVector) -> Result<f64> {
    let variance = variance_g1(table, beta)?;
    let cost: f64 = beta
        .coeffs()
        .iter()
        .zip(&table.costs)
        .map(|(&b, &c)| b * c)
        .sum();
    Ok(cost * variance)
}

/// Which weighted mean to take.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeanKind {
    /// `sum_i alpha_i v_i`.
    Arithmetic,
    /// `1 / sum_i (alpha_i / v_i)`; requires positive values.
    Harmonic,
    /// `(sum_i alpha_i v_i^p)^(1/p)`; requires positive values. `Power(0)`
    /// evaluates the geometric-mean limit; `Power(1)` and `Power(-1)` agree
    /// with the arithmetic and harmonic kinds.
    Power(f64),
}

/// The weighted mean of `values` with weights `alpha`.
pub fn weighted_mean(values: &[f64], alpha: &SimplexVector, kind: MeanKind) -> Result<f64> {
    if values.len() != alpha.len() {
        return Err(Error::DimensionMismatch {
            expected: alpha.len(),
            got: values.len(),
        });
    }
    let pairs = || alpha.coeffs().iter().zip(values);
    match kind {
        MeanKind::Arithmetic => Ok(pairs().map(|(&a, &v)| a * v).sum()),
        MeanKind::Harmonic => {
            require_positive(values)?;
            Ok(1.0 / pairs().map(|(&a, &v)| a / v).sum::<f64>())
        }
        MeanKind::Power(p) => {
            require_positive(values)?;
            if p == 0.0 {
                Ok(pairs().map(|(&a, &v)| a * v.ln()).sum::<f64>().exp())
            } else {
                Ok(pairs().map(|(&a, &v)| a * v.powf(p)).sum::<f64>().powf(1.0 / p))
            }
        }
    }
}

fn require_positive(values: &[f64]) -> Result<()> {
    for (index, &value) in values.iter().enumerate() {
        if !(value > 0.0) {
            return Err(Error::NonPositiveValue { index, value });
        }
    }
    Ok(())
}

/// One row of a bounds table: the three upper bounds, the two reference
/// means, and the exact variance they bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundsReport {
    /// Harmonic-mean-based bound.
    pub b1: f64,
    /// Weighted harmonic mean of `v` (reference column, not a bound).
    pub harmonic_mean: f64,
    /// Arithmetic-mean bound `A(v; alpha)`.
    pub b2: f64,
    /// Power-mean-based bound.
    pub b3: f64,
    /// Weighted power mean of `v` with exponent −1/2 (reference column,
    /// not a bound).
    pub power_mean: f64,
    /// Exact variance `V[F¹]`.
    pub variance: f64,
}

/// `H(v^s; alpha) = 1 / sum_i alpha_i v_i^{-s}` for positive `v`.
fn harmonic_of_powers(table: &MomentTable, s: f64) -> f64 {
    1.0 / table
        .alpha
        .coeffs()
        .iter()
        .zip(&table.v)
        .map(|(&a, &v)| a * v.powf(-s))
        .sum::<f64>()
}

/// `A(v^s; alpha) = sum_i alpha_i v_i^s` for positive `v`.
fn arithmetic_of_powers(table: &MomentTable, s: f64) -> f64 {
    table
        .alpha
        .coeffs()
        .iter()
        .zip(&table.v)
        .map(|(&a, &v)| a * v.powf(s))
        .sum()
}

fn require_unbiased(table: &MomentTable) -> Result<()> {
    let tol = UNBIASED_REL_TOL * table.mu.abs().max(1.0);
    for (index, &mu_i) in table.mu_i.iter().enumerate() {
        if (mu_i - table.mu).abs() > tol {
            return Err(Error::BiasedTechnique {
                index,
                mu_i,
                mu: table.mu,
            });
        }
    }
    Ok(())
}

/// The three variance upper bounds for unbiased techniques, with the
/// reference mean columns and the exact variance.
///
/// Fails with [`Error::BiasedTechnique`] if some `mu_i` deviates from `mu`
/// (relative tolerance [`UNBIASED_REL_TOL`]) and with
/// [`Error::NonPositiveValue`] if some `v_i` is not strictly positive.
pub fn bounds_unbiased(table: &MomentTable) -> Result<BoundsReport> {
    require_unbiased(table)?;
    require_positive(&table.v)?;
    let mu2 = table.mu * table.mu;
    let hm = weighted_mean(&table.v, &table.alpha, MeanKind::Harmonic)?;
    let am = weighted_mean(&table.v, &table.alpha, MeanKind::Arithmetic)?;
    let pm = weighted_mean(&table.v, &table.alpha, MeanKind::Power(-0.5))?;
    let h_sq = harmonic_of_powers(table, 2.0);
    Ok(BoundsReport {
        b1: hm + mu2 * (hm * hm / h_sq - 1.0),
        harmonic_mean: hm,
        b2: am,
        b3: pm + mu2 * (pm / hm - 1.0),
        power_mean: pm,
        variance: variance_f1(table),
    })
}

/// The three variance upper bounds valid for biased techniques, in the same
/// report layout as [`bounds_unbiased`].
///
/// Requires strictly positive `v_i`. The bounds' validity additionally
/// assumes each technique covers the integrand on its own support; with
/// overlapping partial supports the reported values can drop below the
/// variance.
pub fn bounds_biased(table: &MomentTable) -> Result<BoundsReport> {
    require_positive(&table.v)?;
    let mu2 = table.mu * table.mu;
    let hm = weighted_mean(&table.v, &table.alpha, MeanKind::Harmonic)?;
    let am = weighted_mean(&table.v, &table.alpha, MeanKind::Arithmetic)?;
    let pm = weighted_mean(&table.v, &table.alpha, MeanKind::Power(-0.5))?;
    let mu_i_sq: Vec<f64> = table.mu_i.iter().map(|&m| m * m).collect();
    let am_mu_sq = weighted_mean(&mu_i_sq, &table.alpha, MeanKind::Arithmetic)?;
    // H(v^k / mu_i^2; alpha) = 1 / sum_i alpha_i mu_i^2 v_i^{-k}; infinite
    // ratios (mu_i = 0) contribute zero to the sum.
    let h_ratio = |k: f64| -> f64 {
        1.0 / table
            .alpha
            .coeffs()
            .iter()
            .zip(&table.v)
            .zip(&mu_i_sq)
            .map(|((&a, &v), &m2)| a * m2 * v.powf(-k))
            .sum::<f64>()
    };
    Ok(BoundsReport {
        b1: hm + hm * hm / h_ratio(2.0) - mu2,
        harmonic_mean: hm,
        b2: am + am_mu_sq - mu2,
        b3: pm + pm / h_ratio(1.0) - mu2,
        power_mean: pm,
        variance: variance_f1(table),
    })
}

/// The one-parameter family of variance bounds for unbiased techniques:
///
/// `H(v^t)²/H(v^{2t−1}) + mu² (H(v^t)²/H(v^{2t}) − 1)`.
///
/// Specializes to the arithmetic bound at `t = 0`, the harmonic-based bound
/// at `t = 1`, and the power-mean-based bound at `t = 1/2`.
pub fn generalized_bound(table: &MomentTable, t: f64) -> Result<f64> {
    require_unbiased(table)?;
    require_positive(&table.v)?;
    let mu2 = table.mu * table.mu;
    let ht = harmonic_of_powers(table, t);
    Ok(ht * ht / harmonic_of_powers(table, 2.0 * t - 1.0)
        + mu2 * (ht * ht / harmonic_of_powers(table, 2.0 * t) - 1.0))
}

/// The same family written with arithmetic means:
///
/// `A(v^{2t+1})/A(v^t)² + mu² (A(v^{2t})/A(v^t)² − 1)`.
///
/// Equals [`generalized_bound`] at parameter `−t`.
pub fn generalized_bound_arithmetic(table: &MomentTable, t: f64) -> Result<f64> {
    require_unbiased(table)?;
    require_positive(&table.v)?;
    let mu2 = table.mu * table.mu;
    let at = arithmetic_of_powers(table, t);
    Ok(arithmetic_of_powers(table, 2.0 * t + 1.0) / (at * at)
        + mu2 * (arithmetic_of_powers(table, 2.0 * t) / (at * at) - 1.0))
}

/// The one-parameter bound family valid for biased techniques:
///
/// `H(v^t)²/H(v^{2t−1}) + H(v^t)²/H(v^{2t}/mu_i²) − mu²`.
pub fn generalized_bound_biased(table: &MomentTable, t: f64) -> Result<f64> {
    require_positive(&table.v)?;
    let mu2 = table.mu * table.mu;
    let ht = harmonic_of_powers(table, t);
    let h_ratio: f64 = 1.0
        / table
            .alpha
            .coeffs()
            .iter()
            .zip(&table.v)
            .zip(&table.mu_i)
            .map(|((&a, &v), &m)| a * m * m * v.powf(-2.0 * t))
            .sum::<f64>();
    Ok(ht * ht / harmonic_of_powers(table, 2.0 * t - 1.0) + ht * ht / h_ratio - mu2)
}
