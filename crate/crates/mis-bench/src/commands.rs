//! The four harness commands.
//!
//! Each command produces one [`Table`]. Rows (one per strategy) are computed
//! concurrently through the core execution shim and emitted in declared
//! order, so output bytes do not depend on thread scheduling.

use mis_core::analysis::{
    bounds_unbiased, inverse_efficiency, moments_with_base, single_technique_moments, variance_f1,
    variance_g1, BoundsReport, SingleTechniqueMoments,
};
use mis_core::estimators::{empirical_variance, estimate_f, estimate_g, RngSeed};
use mis_core::model::{allocate, example_problem, strategy_by_name, Problem, SimplexVector};
use mis_core::optimize::{min_inverse_efficiency_g, solve_alpha, Objective};
use mis_core::{exec, Error};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::table::{Cell, Table};

/// Relative slack absorbing quadrature noise in pre-emission consistency
/// checks of mathematically guaranteed inequalities.
const SELF_CHECK_SLACK: f64 = 1e-9;

/// Per-technique variances below this fraction of the second moment are
/// cancellation noise of an exactly-zero variance (64 ulps of the
/// subtraction `E[X²] − E[X]²`).
const ZERO_VARIANCE_ULPS: f64 = 64.0 * f64::EPSILON;

/// A command's table plus an optional failure to report *after* emitting it
/// (the solver's best iterate is still printed when it did not converge).
#[derive(Debug)]
pub struct CmdResult {
    /// The table to emit.
    pub table: Table,
    /// A failure that must terminate the process after emission.
    pub failure: Option<CliError>,
}

impl CmdResult {
    fn ok(table: Table) -> Self {
        Self {
            table,
            failure: None,
        }
    }
}

/// Which variance the `optimize` command minimizes over the mixture
/// coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizeCase {
    /// Sample counts follow the coefficients themselves.
    Case1,
    /// Sample counts fixed at user-provided fractions.
    Case3,
    /// Sample counts fixed at equal fractions.
    Case4,
}

impl OptimizeCase {
    fn label(self) -> &'static str {
        match self {
            OptimizeCase::Case1 => "case1",
            OptimizeCase::Case3 => "case3",
            OptimizeCase::Case4 => "case4",
        }
    }
}

fn built_problem(cfg: &RunConfig) -> Result<Problem, CliError> {
    let problem = example_problem(cfg.problem_id)?;
    let costs = cfg.cost_profile.costs_for(cfg.problem_id, problem.n())?;
    Ok(problem.with_costs(&costs)?)
}

/// Resolves every configured strategy name up front so typos fail before any
/// integration starts.
fn resolved_strategies(
    cfg: &RunConfig,
) -> Result<Vec<(String, mis_core::AlphaStrategy)>, CliError> {
    cfg.strategies
        .iter()
        .map(|name| Ok((name.clone(), strategy_by_name(name)?)))
        .collect()
}

/// One row per strategy, computed concurrently and collected in declared
/// order.
fn strategy_rows<T: Send>(
    strategies: &[(String, mis_core::AlphaStrategy)],
    problem: &Problem,
    base: &SingleTechniqueMoments,
    row: impl Fn(&SimplexVector) -> Result<T, Error> + Send + Sync,
) -> Result<Vec<T>, CliError> {
    let results = exec::map_indexed(strategies.len(), |i| {
        let alpha = strategies[i].1.resolve(problem, base.v())?;
        row(&alpha)
    });
    let mut rows = Vec::with_capacity(results.len());
    for result in results {
        rows.push(result?);
    }
    Ok(rows)
}

/// The variance-upper-bound table: per strategy, the three bounds, the two
/// reference means, and the exact variance, all analytic and at unit costs.
pub fn cmd_bounds(cfg: &RunConfig) -> Result<CmdResult, CliError> {
    if !(1..=4).contains(&cfg.problem_id) {
        return Err(CliError::Validation(format!(
            "the bounds table covers problems 1..=4; got problem {}",
            cfg.problem_id
        )));
    }
    // The bound tables assume every technique costs the same.
    let problem = example_problem(cfg.problem_id)?;
    let problem = problem.with_costs(&vec![1.0; problem.n()])?;
    let strategies = resolved_strategies(cfg)?;
    let base = single_technique_moments(&problem, &cfg.quadrature)?;
    let reports = strategy_rows(&strategies, &problem, &base, |alpha| {
        let table = moments_with_base(&problem, alpha, &cfg.quadrature, &base)?;
        bounds_unbiased(&table)
    })?;

    let mut table = Table::new(
        ["strategy", "b1", "harmonic_mean", "b2", "b3", "power_mean", "variance"]
            .map(String::from)
            .to_vec(),
    );
    for ((name, _), report) in strategies.iter().zip(&reports) {
        check_bound_row(name, report)?;
        table.push_row(vec![
            Cell::Text(name.clone()),
            Cell::Real(report.b1),
            Cell::Real(report.harmonic_mean),
            Cell::Real(report.b2),
            Cell::Real(report.b3),
            Cell::Real(report.power_mean),
            Cell::Real(report.variance),
        ]);
    }
    Ok(CmdResult::ok(table))
}

/// Aborts emission if a bound column drops below the variance it bounds.
/// Only B1, B2, and B3 are bounds; the harmonic/power mean columns are
/// reference values and may legitimately sit below the variance.
fn check_bound_row(strategy: &str, report: &BoundsReport) -> Result<(), CliError> {
    for (column, bound) in [("b1", report.b1), ("b2", report.b2), ("b3", report.b3)] {
        let slack = SELF_CHECK_SLACK * bound.abs().max(report.variance.abs()).max(1.0);
        if !(bound + slack >= report.variance) {
            return Err(CliError::SelfCheck(format!(
                "bound {column} = {bound} is below the variance {} in row `{strategy}`",
                report.variance
            )));
        }
    }
    Ok(())
}

/// The inverse-efficiency table: per strategy, cost × variance for the
/// balance-heuristic estimator and for the decoupled estimator at its
/// cost-aware optimal allocation.
pub fn cmd_efficiency(cfg: &RunConfig) -> Result<CmdResult, CliError> {
    let problem = built_problem(cfg)?;
    let strategies = resolved_strategies(cfg)?;
    let base = single_technique_moments(&problem, &cfg.quadrature)?;
    let rows = strategy_rows(&strategies, &problem, &base, |alpha| {
        let table = moments_with_base(&problem, alpha, &cfg.quadrature, &base)?;
        let f = inverse_efficiency(&table, table.alpha())?;
        let g = min_inverse_efficiency_g(&table);
        Ok((f, g))
    })?;

    let mut table = Table::new(
        ["strategy", "inverse_efficiency_f", "inverse_efficiency_g"]
            .map(String::from)
            .to_vec(),
    );
    for ((name, _), &(f, g)) in strategies.iter().zip(&rows) {
        // Cauchy–Schwarz guarantees the optimal-allocation estimator is at
        // least as efficient; a violation is a bug.
        let slack = SELF_CHECK_SLACK * f.abs().max(g.abs()).max(1.0);
        if !(g <= f + slack) {
            return Err(CliError::SelfCheck(format!(
                "optimal-allocation inverse efficiency {g} exceeds the \
                 balance-heuristic value {f} in row `{name}`"
            )));
        }
        table.push_row(vec![
            Cell::Text(name.clone()),
            Cell::Real(f),
            Cell::Real(g),
        ]);
    }
    Ok(CmdResult::ok(table))
}

/// A seeded Monte Carlo run: point estimate, empirical variance over the
/// replications, the analytic variance of the same (allocated) estimator,
/// and their discrepancy in standard errors.
pub fn cmd_estimate(
    cfg: &RunConfig,
    alpha: Option<&[f64]>,
    beta: Option<&[f64]>,
) -> Result<CmdResult, CliError> {
    let problem = built_problem(cfg)?;
    let n_tech = problem.n();
    if cfg.n < n_tech as u64 {
        return Err(CliError::Validation(format!(
            "budget --n {} is smaller than the number of techniques {n_tech}",
            cfg.n
        )));
    }
    if cfg.runs < 2 {
        return Err(CliError::Validation(
            "estimate needs --runs >= 2 to report an empirical variance".to_string(),
        ));
    }
    // Validate the coefficient vectors before any sampling or integration.
    let explicit_alpha = alpha
        .map(|a| SimplexVector::new(a.to_vec()))
        .transpose()
        .map_err(CliError::from)?;
    let beta_vec = beta
        .map(|b| SimplexVector::new(b.to_vec()))
        .transpose()
        .map_err(CliError::from)?;

    let base = single_technique_moments(&problem, &cfg.quadrature)?;
    let alpha_vec = match explicit_alpha {
        Some(a) => a,
        None => strategy_by_name(&cfg.strategies[0])?.resolve(&problem, base.v())?,
    };
    let beta_vec = beta_vec.unwrap_or_else(|| alpha_vec.clone());
    let balance = beta_vec == alpha_vec;

    let table = moments_with_base(&problem, &alpha_vec, &cfg.quadrature, &base)?;
    let counts = allocate(&beta_vec, cfg.n)?;
    // Variance of the estimator actually run, with its integer counts:
    // sum_i alpha_i² sigma'_i² / n_i. Variances below the cancellation
    // quantum of their second moment are exact zeros.
    let analytic: f64 = alpha_vec
        .coeffs()
        .iter()
        .zip(table.sigma_prime_sq())
        .zip(table.mu_prime())
        .zip(counts.counts())
        .map(|(((&a, &s), &m), &n_i)| {
            let s = if s <= ZERO_VARIANCE_ULPS * (s + m * m) { 0.0 } else { s };
            a * a * s / n_i as f64
        })
        .sum();

    let seed = RngSeed::new(cfg.seed, 0);
    let stats = empirical_variance(cfg.runs, |r| {
        let run_seed = seed.run(r);
        let run = if balance {
            estimate_f(&problem, &alpha_vec, cfg.n, run_seed)?
        } else {
            estimate_g(&problem, &alpha_vec, &counts, run_seed)?
        };
        Ok(run.value())
    })?;

    let discrepancy = (stats.variance() - analytic).abs();
    let z = if discrepancy == 0.0 {
        0.0
    } else if stats.variance_se() > 0.0 {
        discrepancy / stats.variance_se()
    } else {
        f64::INFINITY
    };

    let mut out = Table::new(
        ["problem", "estimator", "n", "runs", "estimate", "empirical_variance", "analytic_variance", "z_score"]
            .map(String::from)
            .to_vec(),
    );
    out.push_row(vec![
        Cell::Text(problem.label().to_string()),
        Cell::Text(if balance { "balance" } else { "decoupled" }.to_string()),
        Cell::Count(cfg.n),
        Cell::Count(cfg.runs as u64),
        Cell::Real(stats.mean()),
        Cell::Real(stats.variance()),
        Cell::Real(analytic),
        Cell::Real(z),
    ]);
    Ok(CmdResult::ok(out))
}

/// Minimizes one of the estimator variances over the mixture coefficients
/// (uniform start) and reports the stationary point against the equal-
/// coefficient baseline. A non-converged run still reports its best iterate
/// and then exits with the convergence failure code.
pub fn cmd_optimize(
    cfg: &RunConfig,
    case: OptimizeCase,
    beta: Option<&[f64]>,
) -> Result<CmdResult, CliError> {
    let problem = built_problem(cfg)?;
    let n = problem.n();
    let objective = match case {
        OptimizeCase::Case1 => Objective::Balance,
        OptimizeCase::Case3 => {
            let beta = beta.ok_or_else(|| {
                CliError::Validation(
                    "optimizing at fixed counts (case3) requires --beta".to_string(),
                )
            })?;
            Objective::FixedCounts(SimplexVector::new(beta.to_vec())?)
        }
        OptimizeCase::Case4 => Objective::UniformCounts,
    };

    let outcome = solve_alpha(&problem, &objective, &cfg.quadrature, &cfg.solver)?;

    // Equal-coefficient baseline of the same objective.
    let uniform = SimplexVector::uniform(n);
    let base = single_technique_moments(&problem, &cfg.quadrature)?;
    let at_uniform = moments_with_base(&problem, &uniform, &cfg.quadrature, &base)?;
    let baseline = match &objective {
        Objective::Balance => variance_f1(&at_uniform),
        Objective::FixedCounts(b) => variance_g1(&at_uniform, b)?,
        Objective::UniformCounts => variance_g1(&at_uniform, &uniform)?,
    };

    let mut headers: Vec<String> =
        ["case", "converged", "iterations", "residual", "value", "value_at_equal"]
            .map(String::from)
            .to_vec();
    headers.extend((1..=n).map(|i| format!("alpha_{i}")));
    let mut table = Table::new(headers);
    let mut row = vec![
        Cell::Text(case.label().to_string()),
        Cell::Flag(outcome.converged()),
        Cell::Count(outcome.iterations() as u64),
        Cell::Real(outcome.residual()),
        Cell::Real(outcome.value()),
        Cell::Real(baseline),
    ];
    row.extend(outcome.alpha().coeffs().iter().map(|&a| Cell::Real(a)));
    table.push_row(row);

    let failure = (!outcome.converged()).then(|| {
        CliError::Convergence(format!(
            "solver stopped at residual {:.3e} after {} iterations \
             (threshold {:.3e}); the table reports its best iterate",
            outcome.residual(),
            outcome.iterations(),
            cfg.solver.grad_tol
        ))
    });
    Ok(CmdResult { table, failure })
}
