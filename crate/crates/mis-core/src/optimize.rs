//! Optimal sample allocation and mixture-coefficient search.
//!
//! Two levers control the estimator family's variance: the count fractions
//! `beta` (how many samples each technique draws) and the mixture
//! coefficients `alpha` (how techniques are weighted in the combined
//! density). For fixed `alpha` the optimal `beta` is a closed form; the
//! optimal `alpha` has no closed form and is found by projected gradient
//! descent on the simplex using analytic gradients.

use crate::analysis::{
    mixture_pdf, moments_with_base, single_technique_moments, variance_f1, variance_g1,
    MomentTable,
};
use crate::error::{Error, Result};
use crate::exec;
use crate::model::{Problem, SimplexVector};
use crate::quadrature::{integrate, QuadratureConfig};

/// Conditional variances this many ulps below their cancellation scale are
/// treated as exact zeros: `sigma'^2` is computed as a difference of
/// second moments, so its honest resolution is a few ulps of `mu'^2`.
const ZERO_VARIANCE_ULPS: f64 = 64.0 * f64::EPSILON;

/// Runs `n` fallible jobs through the execution shim, keeping index order.
fn try_map(n: usize, job: impl Fn(usize) -> Result<f64> + Send + Sync) -> Result<Vec<f64>> {
    exec::map_indexed(n, job).into_iter().collect()
}

// ---------------------------------------------------------------------------
// Closed-form optimal count fractions at fixed mixture coefficients.
// ---------------------------------------------------------------------------

/// Per-technique weights `alpha_i sigma'_i (/ sqrt(c_i))` with degenerate
/// entries floored so they can form a valid simplex vector.
fn deviation_weights(table: &MomentTable, costs: Option<&[f64]>) -> Result<Vec<f64>> {
    let mut weights = Vec::with_capacity(table.n());
    let mut max_w = 0.0f64;
    for i in 0..table.n() {
        let s2 = table.sigma_prime_sq()[i];
        let scale = s2 + table.mu_prime()[i] * table.mu_prime()[i];
        let s2 = if s2 <= ZERO_VARIANCE_ULPS * scale { 0.0 } else { s2 };
        let mut w = table.alpha().coeffs()[i] * s2.sqrt();
        if let Some(c) = costs {
            w /= c[i].sqrt();
        }
        max_w = max_w.max(w);
        weights.push(w);
    }
    if max_w == 0.0 {
        return Err(Error::AllZeroVariance);
    }
    // A technique whose conditional variance vanishes needs no samples; it
    // keeps a vanishing share so the result stays strictly positive.
    for w in &mut weights {
        if *w == 0.0 {
            *w = 1e-12 * max_w;
        }
    }
    Ok(weights)
}

/// Count fractions minimizing `V[G¹]` at the table's mixture coefficients:
/// `beta*_i` proportional to `alpha_i sigma'_i`.
pub fn optimal_beta(table: &MomentTable) -> Result<SimplexVector> {
    SimplexVector::normalized(&deviation_weights(table, None)?)
}

/// Count fractions minimizing cost-weighted inverse efficiency:
/// `beta*_i` proportional to `alpha_i sigma'_i / sqrt(c_i)`.
pub fn optimal_beta_with_costs(table: &MomentTable) -> Result<SimplexVector> {
    SimplexVector::normalized(&deviation_weights(table, Some(table.costs()))?)
}

/// The minimum of `V[G¹]` over count fractions: `(sum_i alpha_i sigma'_i)²`.
pub fn min_variance_g(table: &MomentTable) -> f64 {
    let s: f64 = table
        .alpha()
        .coeffs()
        .iter()
        .zip(table.sigma_prime_sq())
        .map(|(&a, &s2)| a * s2.max(0.0).sqrt())
        .sum();
    s * s
}

/// The minimum of `(sum_i beta_i c_i) · V[G¹]` over count fractions:
/// `(sum_i alpha_i sigma'_i sqrt(c_i))²`.
pub fn min_inverse_efficiency_g(table: &MomentTable) -> f64 {
    let s: f64 = table
        .alpha()
        .coeffs()
        .iter()
        .zip(table.sigma_prime_sq())
        .zip(table.costs())
        .map(|((&a, &s2), &c)| a * s2.max(0.0).sqrt() * c.sqrt())
        .sum();
    s * s
}

// ---------------------------------------------------------------------------
// Dominance between count-follow-the-mixture and uniform counts.
// ---------------------------------------------------------------------------

/// Outcome of the pairwise-ordering comparison between `V[F¹]` (counts
/// follow the mixture coefficients) and `V[G¹]` at uniform counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DominanceVerdict {
    /// The sequences are similarly ordered, so uniform counts cannot beat
    /// counts that follow the mixture coefficients.
    BalancePreferred,
    /// The sequences are oppositely ordered, so uniform counts are at least
    /// as good.
    UniformCountsPreferred,
    /// Both orderings hold (one sequence is constant): equal variance.
    Equivalent,
    /// Mixed orderings: the pairwise test is silent either way.
    Inconclusive,
}

/// Compares `V[F¹] = sum_i alpha_i sigma'_i²` against
/// `V[G¹](1/n) = n sum_i alpha_i² sigma'_i²` by the ordering of the
/// sequences `(alpha_i sigma'_i²)` and `(alpha_i)`: similarly ordered
/// sequences make the uniform-count variant no better, oppositely ordered
/// ones make it no worse. Ties are neutral; zero variances are allowed,
/// negative or non-finite ones are rejected.
pub fn dominance_compare(
    alpha: &SimplexVector,
    sigma_prime_sq: &[f64],
) -> Result<DominanceVerdict> {
    let n = alpha.len();
    if sigma_prime_sq.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: sigma_prime_sq.len(),
        });
    }
    for (i, &s) in sigma_prime_sq.iter().enumerate() {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::NonPositiveValue { index: i, value: s });
        }
    }
    let a: Vec<f64> = alpha
        .coeffs()
        .iter()
        .zip(sigma_prime_sq)
        .map(|(&al, &s)| al * s)
        .collect();
    let b = alpha.coeffs();
    let mut any_pos = false;
    let mut any_neg = false;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (a[i] - a[j]) * (b[i] - b[j]);
            any_pos |= d > 0.0;
            any_neg |= d < 0.0;
        }
    }
    Ok(match (any_neg, any_pos) {
        (false, false) => DominanceVerdict::Equivalent,
        (false, true) => DominanceVerdict::BalancePreferred,
        (true, false) => DominanceVerdict::UniformCountsPreferred,
        (true, true) => DominanceVerdict::Inconclusive,
    })
}

// ---------------------------------------------------------------------------
// Stationarity of the mixture coefficients.
// ---------------------------------------------------------------------------

/// Which variance is minimized over the mixture coefficients.
#[derive(Clone, Debug)]
pub enum Objective {
    /// `V[F¹](alpha)`: sample counts follow the mixture coefficients.
    Balance,
    /// `V[G¹](alpha; beta)` at fixed count fractions `beta`.
    FixedCounts(SimplexVector),
    /// `V[G¹](alpha; 1/n)`: every technique draws equally often.
    UniformCounts,
}

impl Objective {
    /// The count fractions this objective pins, if any (`None` means the
    /// counts follow `alpha` itself).
    fn count_fractions(&self, n: usize) -> Result<Option<SimplexVector>> {
        match self {
            Objective::Balance => Ok(None),
            Objective::FixedCounts(beta) => {
                if beta.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: beta.len(),
                    });
                }
                Ok(Some(beta.clone()))
            }
            Objective::UniformCounts => Ok(Some(SimplexVector::uniform(n))),
        }
    }
}

/// Objective value and analytic gradient at one point of the simplex.
#[derive(Clone, Debug)]
pub struct OptimalityResidual {
    value: f64,
    gradient: Vec<f64>,
    weighted_gradient: f64,
    components: Vec<f64>,
}

impl OptimalityResidual {
    /// The objective value at the queried coefficients.
    pub fn value(&self) -> f64 {
        self.value
    }

    /// The raw gradient of the objective.
    pub fn gradient(&self) -> &[f64] {
        &self.gradient
    }

    /// `<alpha, gradient>`. Homogeneity pins it: `-value` when counts follow
    /// the coefficients, `0` at fixed count fractions.
    pub fn weighted_gradient(&self) -> f64 {
        self.weighted_gradient
    }

    /// Tangent components `g_j - <alpha, g>`: all zero exactly at an
    /// interior stationary point.
    pub fn components(&self) -> &[f64] {
        &self.components
    }

    /// Largest tangent component in magnitude.
    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

fn value_of(table: &MomentTable, beta: Option<&SimplexVector>) -> Result<f64> {
    match beta {
        None => Ok(variance_f1(table)),
        Some(beta) => variance_g1(table, beta),
    }
}

/// Analytic gradient of the objective with respect to `alpha`.
///
/// Counts following the coefficients (`beta = None`):
/// `dV/da_j = -(sigma'_j² + 2 mu'_j² - 2 ∫ f q p_j / psi²)` with
/// `q = sum_i alpha_i mu'_i p_i`.
///
/// Fixed count fractions:
/// `dV/da_j = 2 [ (a_j/b_j) sigma'_j² - ∫ f² r p_j / psi³ + ∫ f s p_j / psi² ]`
/// with `r = sum_i (a_i²/b_i) p_i` and `s = sum_i (a_i²/b_i) mu'_i p_i`.
fn gradient_of(
    problem: &Problem,
    table: &MomentTable,
    beta: Option<&SimplexVector>,
    cfg: &QuadratureConfig,
) -> Result<Vec<f64>> {
    let n = problem.n();
    let alpha = table.alpha();
    match beta {
        None => {
            let cross = try_map(n, |j| {
                integrate(
                    |x| {
                        let psi = mixture_pdf(problem, alpha, x);
                        if psi <= 0.0 {
                            return 0.0;
                        }
                        let q: f64 = problem
                            .techniques()
                            .iter()
                            .zip(alpha.coeffs())
                            .zip(table.mu_prime())
                            .map(|((t, &a), &m)| a * m * t.pdf(x))
                            .sum();
                        problem.integrand(x) * q * problem.techniques()[j].pdf(x) / (psi * psi)
                    },
                    problem.domain(),
                    cfg,
                )
            })?;
            Ok((0..n)
                .map(|j| {
                    let m = table.mu_prime()[j];
                    -(table.sigma_prime_sq()[j] + 2.0 * m * m - 2.0 * cross[j])
                })
                .collect())
        }
        Some(beta) => {
            let w: Vec<f64> = alpha
                .coeffs()
                .iter()
                .zip(beta.coeffs())
                .map(|(&a, &b)| a * a / b)
                .collect();
            // Jobs 0..n: ∫ f² r p_j / psi³; jobs n..2n: ∫ f s p_j / psi².
            let parts = try_map(2 * n, |k| {
                let j = k % n;
                integrate(
                    |x| {
                        let psi = mixture_pdf(problem, alpha, x);
                        if psi <= 0.0 {
                            return 0.0;
                        }
                        let f = problem.integrand(x);
                        let p_j = problem.techniques()[j].pdf(x);
                        if k < n {
                            let r: f64 = problem
                                .techniques()
                                .iter()
                                .zip(&w)
                                .map(|(t, &wi)| wi * t.pdf(x))
                                .sum();
                            f * f * r * p_j / (psi * psi * psi)
                        } else {
                            let s: f64 = problem
                                .techniques()
                                .iter()
                                .zip(&w)
                                .zip(table.mu_prime())
                                .map(|((t, &wi), &m)| wi * m * t.pdf(x))
                                .sum();
                            f * s * p_j / (psi * psi)
                        }
                    },
                    problem.domain(),
                    cfg,
                )
            })?;
            Ok((0..n)
                .map(|j| {
                    let direct =
                        alpha.coeffs()[j] / beta.coeffs()[j] * table.sigma_prime_sq()[j];
                    2.0 * (direct - parts[j] + parts[n + j])
                })
                .collect())
        }
    }
}

/// Evaluates the objective value, gradient, and simplex-tangent residual of
/// `objective` at `alpha`.
pub fn stationarity_residual(
    problem: &Problem,
    objective: &Objective,
    alpha: &SimplexVector,
    cfg: &QuadratureConfig,
) -> Result<OptimalityResidual> {
    let beta = objective.count_fractions(problem.n())?;
    let base = single_technique_moments(problem, cfg)?;
    let table = moments_with_base(problem, alpha, cfg, &base)?;
    let value = value_of(&table, beta.as_ref())?;
    let gradient = gradient_of(problem, &table, beta.as_ref(), cfg)?;
    Ok(residual_from(alpha, value, gradient))
}

fn residual_from(alpha: &SimplexVector, value: f64, gradient: Vec<f64>) -> OptimalityResidual {
    let weighted_gradient: f64 = alpha
        .coeffs()
        .iter()
        .zip(&gradient)
        .map(|(&a, &g)| a * g)
        .sum();
    let components = gradient.iter().map(|g| g - weighted_gradient).collect();
    OptimalityResidual {
        value,
        gradient,
        weighted_gradient,
        components,
    }
}

// ---------------------------------------------------------------------------
// Projected gradient descent on the floored simplex.
// ---------------------------------------------------------------------------

/// Tuning knobs of [`solve_alpha`].
#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Maximum number of accepted descent steps.
    pub max_iters: u32,
    /// Convergence threshold on the projected-gradient residual (absolute).
    pub grad_tol: f64,
    /// Initial line-search step; adapted as the run progresses.
    pub step_init: f64,
    /// Lower bound kept on every coefficient so densities never drop out of
    /// the mixture entirely; minima on the boundary are flagged instead of
    /// reached exactly.
    pub simplex_floor: f64,
    /// Starting coefficients (uniform when absent).
    pub start: Option<SimplexVector>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            grad_tol: 1e-7,
            step_init: 0.1,
            simplex_floor: 1e-6,
            start: None,
        }
    }
}

/// Result of a simplex search over the mixture coefficients.
#[derive(Clone, Debug)]
pub struct SolveOutcome {
    alpha: SimplexVector,
    value: f64,
    residual: f64,
    iterations: u32,
    converged: bool,
    on_boundary: bool,
}

impl SolveOutcome {
    /// The best coefficients found.
    pub fn alpha(&self) -> &SimplexVector {
        &self.alpha
    }

    /// Objective value at [`Self::alpha`].
    pub fn value(&self) -> f64 {
        self.value
    }

    /// Final projected-gradient residual (see [`SolverConfig::grad_tol`]).
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Number of accepted descent steps.
    pub fn iterations(&self) -> u32 {
        self.iterations
    }

    /// Whether the residual reached the tolerance.
    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Whether any coefficient sits at the simplex floor, indicating a
    /// minimum on (or beyond) the boundary.
    pub fn on_boundary(&self) -> bool {
        self.on_boundary
    }
}

/// Euclidean projection onto `{x : sum x = 1, x_i >= floor}`.
fn project_floored_simplex(y: &[f64], floor: f64) -> Vec<f64> {
    let n = y.len();
    let target = 1.0 - n as f64 * floor;
    let z: Vec<f64> = y.iter().map(|&v| v - floor).collect();
    let mut sorted = z.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut prefix = 0.0;
    let mut tau = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        prefix += u;
        let t = (prefix - target) / (k + 1) as f64;
        if u - t > 0.0 {
            tau = t;
        }
    }
    z.iter().map(|&v| (v - tau).max(0.0) + floor).collect()
}

/// KKT residual on the floored simplex: gradient spread over the free
/// coordinates, plus any pull of a floored coordinate back into the
/// interior.
fn kkt_residual(x: &[f64], gradient: &[f64], floor: f64) -> f64 {
    let active = |xi: f64| xi <= floor * (1.0 + 1e-9);
    let free: Vec<usize> = (0..x.len()).filter(|&i| !active(x[i])).collect();
    let lambda = if free.is_empty() {
        gradient.iter().sum::<f64>() / gradient.len() as f64
    } else {
        free.iter().map(|&i| gradient[i]).sum::<f64>() / free.len() as f64
    };
    let mut r = 0.0f64;
    for i in 0..x.len() {
        if active(x[i]) {
            // Minimization: a floored coordinate is optimal only if the
            // objective grows when it re-enters (g_i >= lambda).
            r = r.max(lambda - gradient[i]);
        } else {
            r = r.max((gradient[i] - lambda).abs());
        }
    }
    r
}

/// Minimizes `objective` over the mixture coefficients by projected
/// gradient descent with analytic gradients and a backtracking line search.
///
/// Always returns the best point found; `converged` reports whether the
/// projected-gradient residual met [`SolverConfig::grad_tol`], and
/// `on_boundary` whether the minimum sits at the simplex floor.
pub fn solve_alpha(
    problem: &Problem,
    objective: &Objective,
    quad: &QuadratureConfig,
    solver: &SolverConfig,
) -> Result<SolveOutcome> {
    let n = problem.n();
    let beta = objective.count_fractions(n)?;
    if let Some(start) = &solver.start {
        if start.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: start.len(),
            });
        }
    }
    let floor = solver.simplex_floor.clamp(1e-12, 0.5 / n as f64);
    let base = single_technique_moments(problem, quad)?;
    let table_at = |x: &SimplexVector| moments_with_base(problem, x, quad, &base);

    let start = solver
        .start
        .clone()
        .unwrap_or_else(|| SimplexVector::uniform(n));
    let mut x = project_floored_simplex(start.coeffs(), floor);
    let mut alpha = SimplexVector::normalized(&x)?;
    let mut table = table_at(&alpha)?;
    let mut value = value_of(&table, beta.as_ref())?;
    let mut iterations = 0u32;
    // Spectral (Barzilai-Borwein) steps adapt to the local curvature, which
    // spans several orders of magnitude across the objective family; a
    // nonmonotone line search with a small quadrature-noise allowance keeps
    // them from stalling once true decreases sink below integration noise.
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut recent = vec![value];
    let (residual, converged) = loop {
        let gradient = gradient_of(problem, &table, beta.as_ref(), quad)?;
        let residual = kkt_residual(&x, &gradient, floor);
        if residual <= solver.grad_tol {
            break (residual, true);
        }
        if iterations >= solver.max_iters {
            break (residual, false);
        }

        let bb_step = match &prev {
            Some((px, pg)) => {
                let num: f64 = x.iter().zip(px).map(|(&a, &b)| (a - b) * (a - b)).sum();
                let den: f64 = x
                    .iter()
                    .zip(px)
                    .zip(gradient.iter().zip(pg))
                    .map(|((&a, &b), (&g, &h))| (a - b) * (g - h))
                    .sum();
                if den > 0.0 {
                    (num / den).clamp(1e-10, 1e4)
                } else {
                    1e4
                }
            }
            None => solver.step_init.max(1e-12),
        };
        prev = Some((x.clone(), gradient.clone()));

        let reference = recent.iter().fold(value, |m, &v| m.max(v));
        let allowance = 100.0 * quad.rel_tol * (1.0 + reference.abs());
        let mut s = bb_step;
        let mut accepted = false;
        for _ in 0..60 {
            let target: Vec<f64> = x
                .iter()
                .zip(&gradient)
                .map(|(&xi, &g)| xi - s * g)
                .collect();
            let cand = project_floored_simplex(&target, floor);
            let moved = cand
                .iter()
                .zip(&x)
                .fold(0.0f64, |m, (&c, &xi)| m.max((c - xi).abs()));
            if moved <= 1e-15 {
                break;
            }
            let cand_alpha = SimplexVector::normalized(&cand)?;
            let cand_table = table_at(&cand_alpha)?;
            let cand_value = value_of(&cand_table, beta.as_ref())?;
            let decrease: f64 = gradient
                .iter()
                .zip(&x)
                .zip(&cand)
                .map(|((&g, &xi), &c)| g * (xi - c))
                .sum();
            if cand_value.is_finite()
                && cand_value <= reference - 1e-4 * decrease.max(0.0) + allowance
            {
                x = cand;
                alpha = cand_alpha;
                table = cand_table;
                value = cand_value;
                recent.push(value);
                if recent.len() > 10 {
                    recent.remove(0);
                }
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        iterations += 1;
        if !accepted {
            // No acceptable point at any step length: report where we are.
            break (residual, false);
        }
    };

    let on_boundary = x.iter().any(|&xi| xi <= floor * (1.0 + 1e-9));
    Ok(SolveOutcome {
        alpha,
        value,
        residual,
        iterations,
        converged,
        on_boundary,
    })
}
