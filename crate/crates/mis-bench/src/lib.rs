//! Benchmark harness over the mixture-estimator library.
//!
//! The `bench` binary exposes four commands over the built-in example
//! problems:
//!
//! * `bounds` — analytic variance upper bounds per mixture strategy;
//! * `efficiency` — cost × variance of the balance-heuristic estimator
//!   versus the decoupled estimator at its cost-aware optimal allocation;
//! * `estimate` — a seeded Monte Carlo run compared against the analytic
//!   variance;
//! * `optimize` — variance minimization over the mixture coefficients.
//!
//! Results are emitted as CSV (the interchange format) or markdown. Given
//! the same configuration, a command emits byte-identical output.

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

pub use commands::{cmd_bounds, cmd_efficiency, cmd_estimate, cmd_optimize, CmdResult, OptimizeCase};
pub use config::{load_config, resolve, ConfigFile, CostProfile, OutputFormat, Overrides, RunConfig};
pub use error::CliError;
pub use table::{Cell, Table};
