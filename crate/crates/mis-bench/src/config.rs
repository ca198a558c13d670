//! Run configuration: defaults, TOML config files, and flag overrides.
//!
//! A run is described by one [`RunConfig`]. Values are layered in priority
//! order: built-in defaults, then the `--config` TOML file, then explicit
//! command-line flags. The config file uses kebab-case keys:
//!
//! ```toml
//! problem = 2
//! strategies = ["equal", "inv-variance"]
//! costs = "paper"          # or "unit" or "1,6.24,3.28"
//! n = 10000
//! runs = 200
//! seed = 42
//! format = "csv"           # or "markdown"
//!
//! [quadrature]
//! rel-tol = 1e-10
//! abs-tol = 1e-13
//! max-subdivisions = 1048576
//!
//! [solver]
//! max-iters = 500
//! grad-tol = 1e-7
//! step-init = 0.1
//! simplex-floor = 1e-6
//! ```

use std::path::Path;

use mis_core::{QuadratureConfig, SolverConfig};
use serde::Deserialize;

use crate::error::CliError;

/// How per-technique sampling costs are chosen for a run.
#[derive(Clone, Debug, PartialEq)]
pub enum CostProfile {
    /// The cost sets used by the reference tables: `(1, 6.24, 3.28)` for
    /// problems 1–4 and `(1, 5)` for problem 5.
    Paper,
    /// Unit cost for every technique.
    Unit,
    /// An explicit per-technique cost list.
    Explicit(Vec<f64>),
}

impl CostProfile {
    /// Parses the `--costs` syntax: `paper`, `unit`, or `c1,c2,...`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        match text.trim() {
            "paper" => Ok(CostProfile::Paper),
            "unit" => Ok(CostProfile::Unit),
            list => {
                let costs = parse_real_list(list).map_err(|_| {
                    CliError::Validation(format!(
                        "invalid --costs value `{text}`: expected `paper`, `unit`, \
                         or a comma-separated list of positive reals"
                    ))
                })?;
                Ok(CostProfile::Explicit(costs))
            }
        }
    }

    /// The cost vector for problem `problem_id` with `n` techniques.
    pub fn costs_for(&self, problem_id: u32, n: usize) -> Result<Vec<f64>, CliError> {
        match self {
            CostProfile::Paper => Ok(if problem_id == 5 {
                vec![1.0, 5.0]
            } else {
                vec![1.0, 6.24, 3.28]
            }),
            CostProfile::Unit => Ok(vec![1.0; n]),
            CostProfile::Explicit(costs) => {
                if costs.len() != n {
                    return Err(CliError::Validation(format!(
                        "--costs lists {} values but problem {problem_id} has {n} techniques",
                        costs.len()
                    )));
                }
                Ok(costs.clone())
            }
        }
    }
}

/// Table emission format.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    /// Machine-readable CSV (the interchange format).
    Csv,
    /// Markdown mirroring the CSV at 6 significant digits.
    Markdown,
}

impl OutputFormat {
    fn parse(text: &str) -> Result<Self, CliError> {
        match text {
            "csv" => Ok(OutputFormat::Csv),
            "markdown" => Ok(OutputFormat::Markdown),
            other => Err(CliError::Validation(format!(
                "invalid format `{other}`: expected `csv` or `markdown`"
            ))),
        }
    }
}

/// Everything one command invocation needs.
#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Built-in example problem id (1..=5).
    pub problem_id: u32,
    /// Mixture-coefficient strategies, one table row each.
    pub strategies: Vec<String>,
    /// Per-technique sampling costs.
    pub cost_profile: CostProfile,
    /// Sample budget per estimate.
    pub n: u64,
    /// Replication count for empirical statistics.
    pub runs: u32,
    /// Base RNG seed; replication `r` derives its stream from it.
    pub seed: u64,
    /// Table emission format.
    pub output_format: OutputFormat,
    /// Adaptive-quadrature tolerances for all analytic values.
    pub quadrature: QuadratureConfig,
    /// Simplex-solver tuning for `optimize`.
    pub solver: SolverConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem_id: 1,
            strategies: vec![
                "equal".to_string(),
                "inv-variance".to_string(),
                "inv-cost-variance".to_string(),
            ],
            cost_profile: CostProfile::Paper,
            n: 10_000,
            runs: 100,
            seed: 0,
            output_format: OutputFormat::Csv,
            quadrature: QuadratureConfig::default(),
            solver: SolverConfig::default(),
        }
    }
}

/// Command-line values that override the config file (each `None` means the
/// flag was not given).
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub problem: Option<u32>,
    pub strategies: Option<Vec<String>>,
    pub costs: Option<String>,
    pub n: Option<u64>,
    pub runs: Option<u32>,
    pub seed: Option<u64>,
    pub format: Option<String>,
    pub tol_quad: Option<f64>,
}

/// The deserialized shape of a `--config` TOML file; every field optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    problem: Option<u32>,
    strategies: Option<Vec<String>>,
    costs: Option<String>,
    n: Option<u64>,
    runs: Option<u32>,
    seed: Option<u64>,
    format: Option<String>,
    quadrature: Option<QuadratureSection>,
    solver: Option<SolverSection>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct QuadratureSection {
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    max_subdivisions: Option<u32>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct SolverSection {
    max_iters: Option<u32>,
    grad_tol: Option<f64>,
    step_init: Option<f64>,
    simplex_floor: Option<f64>,
}

/// Reads and parses a TOML config file.
pub fn load_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Validation(format!("cannot read config file {}: {e}", path.display()))
    })?;
    toml::from_str(&text).map_err(|e| {
        CliError::Validation(format!("invalid config file {}: {e}", path.display()))
    })
}

/// Layers defaults, the optional config file, and flag overrides into a
/// validated [`RunConfig`].
pub fn resolve(file: Option<ConfigFile>, flags: &Overrides) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(file) = file {
        apply_file(&mut cfg, file)?;
    }
    apply_flags(&mut cfg, flags)?;
    validate(&cfg)?;
    Ok(cfg)
}

fn apply_file(cfg: &mut RunConfig, file: ConfigFile) -> Result<(), CliError> {
    if let Some(v) = file.problem {
        cfg.problem_id = v;
    }
    if let Some(v) = file.strategies {
        cfg.strategies = v;
    }
    if let Some(v) = file.costs {
        cfg.cost_profile = CostProfile::parse(&v)?;
    }
    if let Some(v) = file.n {
        cfg.n = v;
    }
    if let Some(v) = file.runs {
        cfg.runs = v;
    }
    if let Some(v) = file.seed {
        cfg.seed = v;
    }
    if let Some(v) = file.format {
        cfg.output_format = OutputFormat::parse(&v)?;
    }
    if let Some(q) = file.quadrature {
        if let Some(v) = q.rel_tol {
            cfg.quadrature.rel_tol = v;
        }
        if let Some(v) = q.abs_tol {
            cfg.quadrature.abs_tol = v;
        }
        if let Some(v) = q.max_subdivisions {
            cfg.quadrature.max_subdivisions = v;
        }
    }
    if let Some(s) = file.solver {
        if let Some(v) = s.max_iters {
            cfg.solver.max_iters = v;
        }
        if let Some(v) = s.grad_tol {
            cfg.solver.grad_tol = v;
        }
        if let Some(v) = s.step_init {
            cfg.solver.step_init = v;
        }
        if let Some(v) = s.simplex_floor {
            cfg.solver.simplex_floor = v;
        }
    }
    Ok(())
}

fn apply_flags(cfg: &mut RunConfig, flags: &Overrides) -> Result<(), CliError> {
    if let Some(v) = flags.problem {
        cfg.problem_id = v;
    }
    if let Some(v) = &flags.strategies {
        cfg.strategies = v.clone();
    }
    if let Some(v) = &flags.costs {
        cfg.cost_profile = CostProfile::parse(v)?;
    }
    if let Some(v) = flags.n {
        cfg.n = v;
    }
    if let Some(v) = flags.runs {
        cfg.runs = v;
    }
    if let Some(v) = flags.seed {
        cfg.seed = v;
    }
    if let Some(v) = &flags.format {
        cfg.output_format = OutputFormat::parse(v)?;
    }
    if let Some(v) = flags.tol_quad {
        cfg.quadrature.rel_tol = v;
    }
    Ok(())
}

fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    if !(1..=5).contains(&cfg.problem_id) {
        return Err(CliError::Validation(format!(
            "problem id {} is out of range; valid ids are 1..=5",
            cfg.problem_id
        )));
    }
    if cfg.strategies.is_empty() {
        return Err(CliError::Validation(
            "the strategy list must not be empty".to_string(),
        ));
    }
    if cfg.runs < 1 {
        return Err(CliError::Validation(
            "the replication count must be at least 1".to_string(),
        ));
    }
    if !(cfg.quadrature.rel_tol > 0.0)
        || !(cfg.quadrature.abs_tol > 0.0)
        || cfg.quadrature.max_subdivisions < 1
    {
        return Err(CliError::Validation(
            "quadrature overrides require rel-tol > 0, abs-tol > 0, max-subdivisions >= 1"
                .to_string(),
        ));
    }
    Ok(())
}

/// Parses a comma-separated list of finite positive reals.
pub fn parse_real_list(text: &str) -> Result<Vec<f64>, CliError> {
    let values: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    match values {
        Ok(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => Ok(v),
        _ => Err(CliError::Validation(format!(
            "`{text}` is not a comma-separated list of finite reals"
        ))),
    }
}
