//! The `bench` command-line entry point: flag parsing, config layering, and
//! exit-code mapping. All real work lives in the library crate.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mis_bench::{
    cmd_bounds, cmd_efficiency, cmd_estimate, cmd_optimize, config, CliError, CmdResult,
    OptimizeCase, OutputFormat, Overrides, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "bench",
    version,
    about = "Benchmark harness for the mixture-estimator library",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic variance upper bounds per strategy (problems 1-4, unit costs)
    Bounds(CommonArgs),
    /// Inverse efficiency (cost x variance) of the balance heuristic vs the
    /// optimal decoupled allocation
    Efficiency(CommonArgs),
    /// Seeded Monte Carlo estimate with empirical-vs-analytic variance check
    Estimate {
        #[command(flatten)]
        common: CommonArgs,
        /// Mixture coefficients (comma-separated simplex vector); defaults
        /// to the first configured strategy
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        alpha: Option<Vec<f64>>,
        /// Sample-count fractions; defaults to the mixture coefficients
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        beta: Option<Vec<f64>>,
    },
    /// Minimize estimator variance over the mixture coefficients
    Optimize {
        #[command(flatten)]
        common: CommonArgs,
        /// Which variance to minimize: counts following the coefficients
        /// (case1), fixed counts from --beta (case3), or equal counts (case4)
        #[arg(long, value_enum)]
        case: CaseArg,
        /// Fixed sample-count fractions for case3
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        beta: Option<Vec<f64>>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CaseArg {
    Case1,
    Case3,
    Case4,
}

impl From<CaseArg> for OptimizeCase {
    fn from(case: CaseArg) -> Self {
        match case {
            CaseArg::Case1 => OptimizeCase::Case1,
            CaseArg::Case3 => OptimizeCase::Case3,
            CaseArg::Case4 => OptimizeCase::Case4,
        }
    }
}

/// Flags shared by every subcommand; unset flags fall back to the config
/// file and then to built-in defaults.
#[derive(Args)]
struct CommonArgs {
    /// Built-in example problem id
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=5))]
    problem: Option<u32>,
    /// Comma-separated strategy names (equal, inv-variance, inv-cost-variance)
    #[arg(long, value_delimiter = ',')]
    strategy: Option<Vec<String>>,
    /// Cost profile: paper, unit, or an explicit list c1,c2,...
    #[arg(long)]
    costs: Option<String>,
    /// Sample budget per estimate
    #[arg(long)]
    n: Option<u64>,
    /// Replication count
    #[arg(long)]
    runs: Option<u32>,
    /// Base RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output format: csv or markdown
    #[arg(long)]
    format: Option<String>,
    /// TOML config file; explicit flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Relative quadrature tolerance override
    #[arg(long = "tol-quad")]
    tol_quad: Option<f64>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            problem: self.problem,
            strategies: self.strategy.clone(),
            costs: self.costs.clone(),
            n: self.n,
            runs: self.runs,
            seed: self.seed,
            format: self.format.clone(),
            tol_quad: self.tol_quad,
        }
    }

    fn run_config(&self) -> Result<RunConfig, CliError> {
        let file = self
            .config
            .as_deref()
            .map(config::load_config)
            .transpose()?;
        config::resolve(file, &self.overrides())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    let (cfg, result) = match &command {
        Command::Bounds(common) => {
            let cfg = common.run_config()?;
            let result = cmd_bounds(&cfg)?;
            (cfg, result)
        }
        Command::Efficiency(common) => {
            let cfg = common.run_config()?;
            let result = cmd_efficiency(&cfg)?;
            (cfg, result)
        }
        Command::Estimate {
            common,
            alpha,
            beta,
        } => {
            let cfg = common.run_config()?;
            let result = cmd_estimate(&cfg, alpha.as_deref(), beta.as_deref())?;
            (cfg, result)
        }
        Command::Optimize { common, case, beta } => {
            let cfg = common.run_config()?;
            let result = cmd_optimize(&cfg, (*case).into(), beta.as_deref())?;
            (cfg, result)
        }
    };
    emit(&cfg, result)
}

fn emit(cfg: &RunConfig, result: CmdResult) -> Result<(), CliError> {
    let rendered = match cfg.output_format {
        OutputFormat::Csv => result.table.to_csv(),
        OutputFormat::Markdown => result.table.to_markdown(),
    };
    print!("{rendered}");
    match result.failure {
        Some(failure) => Err(failure),
        None => Ok(()),
    }
}
