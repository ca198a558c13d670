//! Seeded Monte Carlo estimators for the mixture estimator family.
//!
//! Every estimator here is a pure function of its [`RngSeed`]: repeated calls
//! with the same inputs produce bit-identical values, regardless of the
//! `parallel` feature, because randomness is derived per technique from
//! counter-based substreams and accumulation always happens in index order.
//!
//! Stream layout: the 64-bit key is expanded into a ChaCha key, and the
//! 64-bit ChaCha stream id is split as `(run stream << 32) | lane`. Lane `i`
//! drives the value draws of technique `i` in the fixed-count estimators;
//! two reserved lanes drive the index and value draws of the estimators that
//! pick a technique at random per sample. Run `r` of a replication study
//! shifts the upper half via [`RngSeed::run`], so runs are independent and
//! can be evaluated in any order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::analysis::{mixture_pdf, MomentTable};
use crate::error::{Error, Result};
use crate::exec;
use crate::model::{allocate, Allocation, Problem, SimplexVector};

/// Reserved lane for technique-index draws of the randomized estimators.
const INDEX_LANE: u32 = u32::MAX;
/// Reserved lane for value draws of the randomized estimators.
const RANDOMIZED_VALUE_LANE: u32 = u32::MAX - 1;

/// A reproducible seed: `seed` keys the generator and `stream` selects a
/// statistically independent substream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngSeed {
    /// Key material; expanded to the full generator key.
    pub seed: u64,
    /// Substream index; replication studies use one stream per run.
    pub stream: u32,
}

impl RngSeed {
    /// Builds a seed from key material and a substream index.
    pub fn new(seed: u64, stream: u32) -> Self {
        Self { seed, stream }
    }

    /// The seed for run `r` of a replication study: same key, shifted stream.
    pub fn run(self, r: u32) -> Self {
        Self {
            seed: self.seed,
            stream: self.stream.wrapping_add(r),
        }
    }
}

/// One step of the splitmix64 sequence, used only for key expansion.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A generator positioned on the `(seed.stream, lane)` substream.
fn rng_for(seed: RngSeed, lane: u32) -> ChaCha12Rng {
    let mut state = seed.seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream((u64::from(seed.stream) << 32) | u64::from(lane));
    rng
}

/// Which member of the estimator family produced a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorKind {
    /// Fixed per-technique counts proportional to the mixture coefficients.
    Balance,
    /// Fixed per-technique counts decoupled from the mixture coefficients.
    Decoupled,
    /// Technique index drawn at random for every sample, mixture weighting.
    RandomizedBalance,
    /// Constant-weight combination of independent single-technique
    /// estimates, with the technique index drawn at random per sample.
    Linear(LinearKind),
}

/// Weighting rule of the constant-weight (linear) estimators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinearKind {
    /// Weights proportional to `alpha_i / v_i`.
    InverseVariance,
    /// Weights equal to the mixture coefficients.
    Mixture,
    /// Weights proportional to `alpha_i / sqrt(v_i)`.
    InverseDeviation,
}

/// The outcome of one estimator evaluation.
#[derive(Clone, Debug)]
pub struct EstimateRun {
    value: f64,
    counts: Vec<u64>,
    kind: EstimatorKind,
    seed: RngSeed,
}

impl EstimateRun {
    /// The estimate of the integral.
    pub fn value(&self) -> f64 {
        self.value
    }

    /// Realized number of samples drawn from each technique.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Total number of samples across techniques.
    pub fn n_total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Which estimator produced this value.
    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    /// The seed that reproduces this value.
    pub fn seed(&self) -> RngSeed {
        self.seed
    }
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Shared core of the fixed-count estimators:
/// `sum_i (alpha_i / n_i) sum_j f(X_ij) / psi(X_ij)` with `X_ij ~ p_i`.
fn weighted_mixture_estimate(
    problem: &Problem,
    alpha: &SimplexVector,
    allocation: &Allocation,
    seed: RngSeed,
) -> Result<f64> {
    check_dims(problem.n(), alpha.len())?;
    check_dims(problem.n(), allocation.len())?;
    if let Some(zero) = allocation.counts().iter().position(|&c| c == 0) {
        // A technique with positive weight but no samples drops a term of
        // the telescoping expectation, silently biasing the estimate.
        let _ = zero;
        return Err(Error::BudgetTooSmall {
            budget: allocation.total(),
            n: problem.n(),
        });
    }

    let mut value = 0.0;
    for (i, technique) in problem.techniques().iter().enumerate() {
        let n_i = allocation.counts()[i];
        let mut rng = rng_for(seed, i as u32);
        let mut sum = 0.0;
        for _ in 0..n_i {
            let u = rng.gen::<f64>();
            let x = technique.sample(u);
            let fx = problem.integrand(x);
            let psi = mixture_pdf(problem, alpha, x);
            if psi <= 0.0 {
                if fx == 0.0 {
                    continue;
                }
                return Err(Error::ZeroMixtureAtSample { x });
            }
            sum += fx / psi;
        }
        value += alpha.coeffs()[i] / n_i as f64 * sum;
    }
    Ok(value)
}

/// Mixture-weighted estimate with per-technique counts fixed by
/// `allocation`, independently of the mixture coefficients.
pub fn estimate_g(
    problem: &Problem,
    alpha: &SimplexVector,
    allocation: &Allocation,
    seed: RngSeed,
) -> Result<EstimateRun> {
    let value = weighted_mixture_estimate(problem, alpha, allocation, seed)?;
    Ok(EstimateRun {
        value,
        counts: allocation.counts().to_vec(),
        kind: EstimatorKind::Decoupled,
        seed,
    })
}

/// Mixture-weighted estimate with counts proportional to the mixture
/// coefficients (the classic fixed-count balance estimator).
pub fn estimate_f(
    problem: &Problem,
    alpha: &SimplexVector,
    total: u64,
    seed: RngSeed,
) -> Result<EstimateRun> {
    let allocation = allocate(alpha, total)?;
    let value = weighted_mixture_estimate(problem, alpha, &allocation, seed)?;
    Ok(EstimateRun {
        value,
        counts: allocation.counts().to_vec(),
        kind: EstimatorKind::Balance,
        seed,
    })
}

/// Mixture-weighted estimate that draws the technique index at random for
/// every sample instead of fixing per-technique counts.
pub fn estimate_randomized(
    problem: &Problem,
    alpha: &SimplexVector,
    total: u64,
    seed: RngSeed,
) -> Result<EstimateRun> {
    check_dims(problem.n(), alpha.len())?;
    if total == 0 {
        return Err(Error::BudgetTooSmall {
            budget: 0,
            n: problem.n(),
        });
    }
    let alias = AliasTable::new(alpha.coeffs());
    let mut index_rng = rng_for(seed, INDEX_LANE);
    let mut value_rng = rng_for(seed, RANDOMIZED_VALUE_LANE);
    let mut counts = vec![0u64; problem.n()];
    let mut sum = 0.0;
    for _ in 0..total {
        let i = alias.draw(&mut index_rng);
        counts[i] += 1;
        let u = value_rng.gen::<f64>();
        let x = problem.techniques()[i].sample(u);
        let fx = problem.integrand(x);
        let psi = mixture_pdf(problem, alpha, x);
        if psi <= 0.0 {
            if fx == 0.0 {
                continue;
            }
            return Err(Error::ZeroMixtureAtSample { x });
        }
        sum += fx / psi;
    }
    Ok(EstimateRun {
        value: sum / total as f64,
        counts,
        kind: EstimatorKind::RandomizedBalance,
        seed,
    })
}

/// Normalized constant weights of the linear estimators.
fn linear_weights(table: &MomentTable, kind: LinearKind) -> Result<Vec<f64>> {
    let alpha = table.alpha().coeffs();
    if kind == LinearKind::Mixture {
        return Ok(alpha.to_vec());
    }
    let raw: Vec<f64> = alpha
        .iter()
        .zip(table.v())
        .enumerate()
        .map(|(i, (&a, &v))| {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::NonPositiveValue { index: i, value: v });
            }
            Ok(match kind {
                LinearKind::InverseVariance => a / v,
                LinearKind::InverseDeviation => a / v.sqrt(),
                LinearKind::Mixture => unreachable!(),
            })
        })
        .collect::<Result<_>>()?;
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Constant-weight estimate: the technique index `I` is drawn from the
/// mixture coefficients, and each sample contributes
/// `(w_I / alpha_I) f(X) / p_I(X)` with `X ~ p_I`.
///
/// Per-technique variances from `table` set the weights; the moment table
/// must describe `problem` under the same mixture coefficients.
pub fn estimate_linear(
    problem: &Problem,
    table: &MomentTable,
    kind: LinearKind,
    total: u64,
    seed: RngSeed,
) -> Result<EstimateRun> {
    check_dims(problem.n(), table.n())?;
    if total == 0 {
        return Err(Error::BudgetTooSmall {
            budget: 0,
            n: problem.n(),
        });
    }
    let weights = linear_weights(table, kind)?;
    let alpha = table.alpha().coeffs();
    let alias = AliasTable::new(alpha);
    let mut index_rng = rng_for(seed, INDEX_LANE);
    let mut value_rng = rng_for(seed, RANDOMIZED_VALUE_LANE);
    let mut counts = vec![0u64; problem.n()];
    let mut sum = 0.0;
    for _ in 0..total {
        let i = alias.draw(&mut index_rng);
        counts[i] += 1;
        let u = value_rng.gen::<f64>();
        let x = problem.techniques()[i].sample(u);
        let fx = problem.integrand(x);
        let p_i = problem.techniques()[i].pdf(x);
        if p_i <= 0.0 {
            if fx == 0.0 {
                continue;
            }
            return Err(Error::ZeroMixtureAtSample { x });
        }
        sum += weights[i] / alpha[i] * fx / p_i;
    }
    Ok(EstimateRun {
        value: sum / total as f64,
        counts,
        kind: EstimatorKind::Linear(kind),
        seed,
    })
}

/// Replication statistics of a seeded estimator.
#[derive(Clone, Copy, Debug)]
pub struct EmpiricalStats {
    mean: f64,
    variance: f64,
    variance_se: f64,
    runs: u32,
}

impl EmpiricalStats {
    /// Sample mean of the per-run estimates.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance of the per-run estimates.
    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Standard error of [`Self::variance`], from the fourth-moment formula
    /// `Var(s^2) = (m4 - s^4 (R-3)/(R-1)) / R` with `m4` the sample central
    /// fourth moment (normalized by `R`).
    pub fn variance_se(&self) -> f64 {
        self.variance_se
    }

    /// Number of replications.
    pub fn runs(&self) -> u32 {
        self.runs
    }
}

/// Replicates a seeded estimate and reports mean, variance, and the
/// standard error of the variance.
///
/// `job(r)` must return the value of run `r`; runs are evaluated through
/// the execution layer (in parallel when the `parallel` feature is active)
/// and reduced in index order, so the statistics do not depend on thread
/// scheduling.
pub fn empirical_variance(
    runs: u32,
    job: impl Fn(u32) -> Result<f64> + Send + Sync,
) -> Result<EmpiricalStats> {
    if runs < 2 {
        return Err(Error::BudgetTooSmall {
            budget: u64::from(runs),
            n: 2,
        });
    }
    let values: Vec<f64> = exec::map_indexed(runs as usize, |r| job(r as u32))
        .into_iter()
        .collect::<Result<_>>()?;
    let r = f64::from(runs);
    let mean = values.iter().sum::<f64>() / r;
    let mut m2 = 0.0;
    let mut m4 = 0.0;
    for &x in &values {
        let d = x - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    let variance = m2 / (r - 1.0);
    let m4 = m4 / r;
    let var_of_var = (m4 - variance * variance * (r - 3.0) / (r - 1.0)) / r;
    Ok(EmpiricalStats {
        mean,
        variance,
        variance_se: var_of_var.max(0.0).sqrt(),
        runs,
    })
}

/// Walker alias table for O(1) draws from a discrete distribution.
struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<usize>,
}

impl AliasTable {
    fn new(weights: &[f64]) -> Self {
        let n = weights.len();
        let scale = n as f64 / weights.iter().sum::<f64>();
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * scale).collect();
        let mut prob = vec![1.0; n];
        let mut alias: Vec<usize> = (0..n).collect();
        let mut small: Vec<usize> = Vec::with_capacity(n);
        let mut large: Vec<usize> = Vec::with_capacity(n);
        for (i, &p) in scaled.iter().enumerate() {
            if p < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(s), Some(l)) = (small.pop(), large.pop()) {
            prob[s] = scaled[s];
            alias[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if scaled[l] < 1.0 {
                small.push(l);
            } else {
                large.push(l);
            }
        }
        // Leftovers in either worklist are numerically 1 and keep prob 1.
        Self { prob, alias }
    }

    /// Draws one index using a single uniform variate: the integer part
    /// picks the column, the fractional part decides between the column
    /// and its alias.
    fn draw(&self, rng: &mut ChaCha12Rng) -> usize {
        let n = self.prob.len();
        let scaled = rng.gen::<f64>() * n as f64;
        let k = (scaled as usize).min(n - 1);
        let frac = scaled - k as f64;
        if frac < self.prob[k] {
            k
        } else {
            self.alias[k]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alias_table_frequencies_match_weights() {
        let weights = [0.2, 0.3, 0.5];
        let table = AliasTable::new(&weights);
        let mut rng = rng_for(RngSeed::new(42, 0), INDEX_LANE);
        let draws = 200_000u64;
        let mut counts = [0u64; 3];
        for _ in 0..draws {
            counts[table.draw(&mut rng)] += 1;
        }
        for (i, &w) in weights.iter().enumerate() {
            let expected = w * draws as f64;
            let sigma = (draws as f64 * w * (1.0 - w)).sqrt();
            let observed = counts[i] as f64;
            assert!(
                (observed - expected).abs() <= 4.0 * sigma,
                "index {i}: observed {observed}, expected {expected} +- {sigma}"
            );
        }
    }

    #[test]
    fn alias_table_handles_single_and_uniform_weights() {
        let single = AliasTable::new(&[1.0]);
        let mut rng = rng_for(RngSeed::new(7, 0), INDEX_LANE);
        for _ in 0..100 {
            assert_eq!(single.draw(&mut rng), 0);
        }
        let uniform = AliasTable::new(&[0.25; 4]);
        for k in 0..4 {
            assert!((uniform.prob[k] - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn lanes_and_streams_are_distinct() {
        let base = RngSeed::new(123, 0);
        let mut a = rng_for(base, 0);
        let mut b = rng_for(base, 1);
        let mut c = rng_for(base.run(1), 0);
        let mut a2 = rng_for(base, 0);
        let first_a = a.gen::<u64>();
        assert_ne!(first_a, b.gen::<u64>());
        assert_ne!(first_a, c.gen::<u64>());
        assert_eq!(first_a, a2.gen::<u64>());
    }

    #[test]
    fn run_offsets_wrap_instead_of_panicking() {
        let s = RngSeed::new(1, u32::MAX);
        assert_eq!(s.run(2).stream, 1);
    }
}
