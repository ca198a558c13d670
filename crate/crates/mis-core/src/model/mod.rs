//! Problem descriptions, sampling techniques, mixture coefficients, and
//! sample-count allocation.
//!
//! A [`Problem`] bundles an integrand over a finite interval with a set of
//! [`Technique`]s (normalized densities plus inverse-CDF samplers and
//! per-sample costs). Mixture and count coefficients live on the open
//! probability simplex as [`SimplexVector`]s, and [`allocate`] turns a count
//! coefficient vector into integer per-technique sample counts.

mod examples;

pub use examples::example_problem;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::Interval;

/// Tolerance on `|sum - 1|` accepted by [`SimplexVector::new`].
pub const SIMPLEX_SUM_TOL: f64 = 1e-12;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A point on the open probability simplex: strictly positive entries that
/// sum to one (within [`SIMPLEX_SUM_TOL`]).
///
/// Used both for mixture coefficients (the weights of the combined density)
/// and for count coefficients (the fractions of the sample budget).
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexVector {
    coeffs: Vec<f64>,
}

impl SimplexVector {
    /// Validates and wraps explicit coefficients.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidSimplex {
                reason: "empty coefficient vector".to_string(),
            });
        }
        for (i, &a) in coeffs.iter().enumerate() {
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::InvalidSimplex {
                    reason: format!("entry {i} is {a}; entries must be finite and > 0"),
                });
            }
        }
        let sum: f64 = coeffs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::InvalidSimplex {
                reason: format!("entries sum to {sum}, not 1"),
            });
        }
        Ok(Self { coeffs })
    }

    /// The uniform vector `(1/n, ..., 1/n)`.
    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "simplex dimension must be positive");
        Self {
            coeffs: vec![1.0 / n as f64; n],
        }
    }

    /// Normalizes positive weights into simplex coefficients.
    pub fn normalized(weights: &[f64]) -> Result<Self> {
        for (i, &w) in weights.iter().enumerate() {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidSimplex {
                    reason: format!("weight {i} is {w}; weights must be finite and > 0"),
                });
            }
        }
        let sum: f64 = weights.iter().sum();
        Self::new(weights.iter().map(|w| w / sum).collect())
    }

    /// Number of entries.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    /// Always false: the constructors reject empty vectors.
    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// The coefficients as a slice.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

/// One sampling technique: a normalized density with an inverse-CDF sampler
/// and a per-sample cost.
#[derive(Clone)]
pub struct Technique {
    label: String,
    cost: f64,
    pdf: RealFn,
    sampler: RealFn,
}

impl Technique {
    /// Wraps an already-normalized density.
    ///
    /// `pdf` must integrate to one over the problem domain and `sampler`
    /// must map `u` in `[0, 1]` to the `u`-quantile of `pdf`. Both
    /// properties are the caller's contract; estimator and analysis results
    /// are meaningless when they are violated.
    pub fn new(
        label: impl Into<String>,
        cost: f64,
        pdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
        sampler: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(cost > 0.0) || !cost.is_finite() {
            return Err(Error::NonPositiveValue {
                index: 0,
                value: cost,
            });
        }
        Ok(Self {
            label: label.into(),
            cost,
            pdf: Arc::new(pdf),
            sampler: Arc::new(sampler),
        })
    }

    /// Human-readable name used in reports.
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Cost of drawing and evaluating one sample, in arbitrary units.
    pub fn cost(&self) -> f64 {
        self.cost
    }

    /// Evaluates the density at `x`.
    pub fn pdf(&self, x: f64) -> f64 {
        (self.pdf)(x)
    }

    /// Maps a uniform variate `u` in `[0, 1]` to the `u`-quantile.
    ///
    /// # Panics
    ///
    /// Panics if `u` is outside `[0, 1]`.
    pub fn sample(&self, u: f64) -> f64 {
        assert!(
            (0.0..=1.0).contains(&u),
            "sampler argument {u} outside [0, 1]"
        );
        (self.sampler)(u)
    }

    fn with_cost(&self, cost: f64) -> Self {
        Self {
            label: self.label.clone(),
            cost,
            pdf: Arc::clone(&self.pdf),
            sampler: Arc::clone(&self.sampler),
        }
    }
}

impl fmt::Debug for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Technique")
            .field("label", &self.label)
            .field("cost", &self.cost)
            .finish_non_exhaustive()
    }
}

/// An integration problem: integrand, domain, and sampling techniques.
///
/// The techniques must jointly cover the integrand: wherever `f(x) != 0`,
/// at least one density must be positive. This cannot be verified
/// symbolically; estimators report [`Error::ZeroMixtureAtSample`] when a
/// drawn sample lands where the mixture vanishes but the integrand does not.
#[derive(Clone)]
pub struct Problem {
    label: String,
    domain: Interval,
    integrand: RealFn,
    techniques: Vec<Technique>,
    reference_mu: Option<f64>,
}

impl Problem {
    /// Assembles a problem from its parts.
    pub fn new(
        label: impl Into<String>,
        domain: Interval,
        integrand: impl Fn(f64) -> f64 + Send + Sync + 'static,
        techniques: Vec<Technique>,
        reference_mu: Option<f64>,
    ) -> Result<Self> {
        if techniques.is_empty() {
            return Err(Error::InvalidSimplex {
                reason: "a problem needs at least one technique".to_string(),
            });
        }
        Ok(Self {
            label: label.into(),
            domain,
            integrand: Arc::new(integrand),
            techniques,
            reference_mu,
        })
    }

    /// Human-readable name used in reports.
    pub fn label(&self) -> &str {
        &self.label
    }

    /// The integration interval.
    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// Evaluates the integrand at `x`.
    pub fn integrand(&self, x: f64) -> f64 {
        (self.integrand)(x)
    }

    /// The sampling techniques.
    pub fn techniques(&self) -> &[Technique] {
        &self.techniques
    }

    /// Number of techniques.
    pub fn n(&self) -> usize {
        self.techniques.len()
    }

    /// Known value of the integral, when available, for validation.
    pub fn reference_mu(&self) -> Option<f64> {
        self.reference_mu
    }

    /// Returns a copy with the per-technique costs replaced.
    pub fn with_costs(&self, costs: &[f64]) -> Result<Self> {
        if costs.len() != self.techniques.len() {
            return Err(Error::DimensionMismatch {
                expected: self.techniques.len(),
                got: costs.len(),
            });
        }
        for (i, &c) in costs.iter().enumerate() {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::NonPositiveValue { index: i, value: c });
            }
        }
        let techniques = self
            .techniques
            .iter()
            .zip(costs)
            .map(|(t, &c)| t.with_cost(c))
            .collect();
        Ok(Self {
            label: self.label.clone(),
            domain: self.domain,
            integrand: Arc::clone(&self.integrand),
            techniques,
            reference_mu: self.reference_mu,
        })
    }

    /// Per-technique costs as a vector.
    pub fn costs(&self) -> Vec<f64> {
        self.techniques.iter().map(Technique::cost).collect()
    }
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("techniques", &self.techniques)
            .field("reference_mu", &self.reference_mu)
            .finish_non_exhaustive()
    }
}

/// Integer sample counts per technique, summing exactly to the budget.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Allocation {
    counts: Vec<u64>,
    total: u64,
}

impl Allocation {
    /// Per-technique counts.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Total budget; equals the sum of the counts.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of techniques.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    /// Always false: allocations have at least one technique.
    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Rounds `beta * total` to integer counts by the largest-remainder method,
/// with a floor of one sample per technique.
///
/// The counts sum to `total` exactly. Ties in the fractional parts are
/// broken toward lower indices, so the result is deterministic.
pub fn allocate(beta: &SimplexVector, total: u64) -> Result<Allocation> {
    let n = beta.len();
    if total < n as u64 {
        return Err(Error::BudgetTooSmall { budget: total, n });
    }

    let raw: Vec<f64> = beta.coeffs().iter().map(|b| b * total as f64).collect();
    let mut counts: Vec<u64> = raw.iter().map(|r| r.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let ri = raw[i] - raw[i].floor();
        let rj = raw[j] - raw[j].floor();
        rj.total_cmp(&ri).then(i.cmp(&j))
    });
    // The floors never overshoot the budget; distribute what remains to the
    // largest fractional parts (cycling is unreachable short of degenerate
    // rounding, but keeps the loop total).
    let mut deficit = total.saturating_sub(assigned);
    let mut k = 0;
    while deficit > 0 {
        counts[order[k % n]] += 1;
        k += 1;
        deficit -= 1;
    }

    // Enforce the floor by moving single samples from the largest counts.
    while let Some(zero) = counts.iter().position(|&c| c == 0) {
        let donor = (0..n)
            .max_by(|&i, &j| counts[i].cmp(&counts[j]).then(j.cmp(&i)))
            .expect("allocation is non-empty");
        debug_assert!(counts[donor] >= 2, "budget >= n guarantees a donor");
        counts[donor] -= 1;
        counts[zero] += 1;
    }

    Ok(Allocation { counts, total })
}

type StrategyRule = Arc<dyn Fn(&Problem, &[f64]) -> Result<SimplexVector> + Send + Sync>;

/// A named rule mapping a problem and its per-technique variances to
/// mixture coefficients.
///
/// The second argument of the rule is the vector `v` of single-technique
/// estimator variances, `v_i = ∫_{p_i>0} f(x)²/p_i(x) dx − mu_i²`; rules
/// that do not need it may ignore it.
#[derive(Clone)]
pub struct AlphaStrategy {
    name: String,
    rule: StrategyRule,
}

impl AlphaStrategy {
    /// Wraps a rule under a name usable from configuration and the CLI.
    pub fn new(
        name: impl Into<String>,
        rule: impl Fn(&Problem, &[f64]) -> Result<SimplexVector> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            rule: Arc::new(rule),
        }
    }

    /// The registry name.
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Applies the rule.
    pub fn resolve(&self, problem: &Problem, variances: &[f64]) -> Result<SimplexVector> {
        (self.rule)(problem, variances)
    }
}

impl fmt::Debug for AlphaStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AlphaStrategy")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

/// The built-in mixture-coefficient rules.
///
/// * `equal` — uniform coefficients `1/n`.
/// * `inv-variance` — coefficients proportional to `1 / v_i`.
/// * `inv-cost-variance` — coefficients proportional to `1 / (c_i v_i)`.
pub fn builtin_strategies() -> Vec<AlphaStrategy> {
    vec![
        AlphaStrategy::new("equal", |p: &Problem, _v: &[f64]| {
            Ok(SimplexVector::uniform(p.n()))
        }),
        AlphaStrategy::new("inv-variance", |_p: &Problem, v: &[f64]| {
            let weights: Vec<f64> = v.iter().map(|&vi| 1.0 / vi).collect();
            SimplexVector::normalized(&weights)
        }),
        AlphaStrategy::new("inv-cost-variance", |p: &Problem, v: &[f64]| {
            let weights: Vec<f64> = p
                .techniques()
                .iter()
                .zip(v)
                .map(|(t, &vi)| 1.0 / (t.cost() * vi))
                .collect();
            SimplexVector::normalized(&weights)
        }),
    ]
}

/// Looks up one of the [`builtin_strategies`] by name.
pub fn strategy_by_name(name: &str) -> Result<AlphaStrategy> {
    builtin_strategies()
        .into_iter()
        .find(|s| s.name() == name)
        .ok_or_else(|| Error::UnknownStrategy {
            name: name.to_string(),
        })
}
