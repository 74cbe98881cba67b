//! Command-line harness for the softplus penalty solvers.
//!
//! Every command writes exactly its declared format to stdout (or to `--out`)
//! and reports failures through the exit codes in [`CliError`].

pub mod commands;
pub mod error;
pub mod record;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use softpen::{Norm, SolverChoice};

pub use error::{CliError, CliResult};
pub use record::RunRecord;

#[derive(Debug, Parser)]
#[command(
    name = "softpen",
    version,
    about = "Softplus penalty solvers for smooth-constrained convex problems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Apg,
    Svrg,
    Catalyst,
}

impl From<SolverArg> for SolverChoice {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Apg => SolverChoice::Apg,
            SolverArg::Svrg => SolverChoice::Svrg,
            SolverArg::Catalyst => SolverChoice::Catalyst,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    EntrywiseLinear,
    EntrywiseQuadratic,
    InverseKkt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundFamilyArg {
    InverseKkt,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Choose (ξ, δ), solve the penalized problem and certify the result.
    Solve {
        spec: PathBuf,
        #[arg(long)]
        xi: f64,
        #[arg(long)]
        epsilon: f64,
        /// Norm for the measured violation: 1, 2 or inf.
        #[arg(long, default_value = "2")]
        q: Norm,
        #[arg(long, value_enum, default_value = "apg")]
        solver: SolverArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run record JSON; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Trace CSV; defaults to `<out>.trace.csv` when `--out` is given.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Upper bound on the growth aggregate U.
        #[arg(long)]
        u_bound: Option<f64>,
        #[arg(long)]
        force_general_convex: bool,
        #[arg(long, default_value_t = 1_000_000)]
        max_iterations: usize,
    },
    /// Compare solver output on a tight example with its exact penalized optimum.
    ReproduceExample {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        example: u8,
        #[arg(long, default_value_t = 10)]
        m: usize,
        /// Dimension; defaults to m.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 1.5)]
        xi: f64,
        #[arg(long, value_delimiter = ',', default_value = "1e-1,1e-2,1e-3,1e-4")]
        delta_grid: Vec<f64>,
    },
    /// Check the violation bound and the value sandwich at high-accuracy penalized optima.
    CheckBounds {
        #[arg(long, value_enum, default_value = "inverse-kkt")]
        family: BoundFamilyArg,
        /// Seed list such as `0,3,7` or a range `0..20`.
        #[arg(long, default_value = "0..20")]
        seeds: String,
        #[arg(long, value_delimiter = ',', default_value = "2,5,10")]
        m_grid: Vec<usize>,
        /// Absolute δ values; defaults to Δ_max·10^-k for k < `delta_count`.
        #[arg(long, value_delimiter = ',')]
        delta_grid: Option<Vec<f64>>,
        #[arg(long, default_value_t = 5)]
        delta_count: usize,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        /// ξ as a multiple of ‖λ*‖∞.
        #[arg(long, default_value_t = 1.5)]
        xi_factor: f64,
    },
    /// Finite-difference audit of every oracle of a problem spec.
    Gradcheck {
        spec: PathBuf,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Penalty weight used for the penalized-gradient audit.
        #[arg(long, default_value_t = 1.0)]
        xi: f64,
    },
    /// Solve the penalized problem over a δ grid and fit the violation slope.
    SweepDelta {
        spec: PathBuf,
        #[arg(long)]
        xi: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        delta_grid: Vec<f64>,
        /// CSV output; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a zoo instance as a problem spec.
    Generate {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        /// Active constraints; defaults to ⌈m/2⌉.
        #[arg(long)]
        n_active: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Runs one parsed command.
pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Solve {
            spec,
            xi,
            epsilon,
            q,
            solver,
            seed,
            out,
            trace,
            u_bound,
            force_general_convex,
            max_iterations,
        } => commands::solve::run(commands::solve::Args {
            spec,
            xi,
            epsilon,
            q,
            solver: solver.into(),
            seed,
            out,
            trace,
            u_bound,
            force_general_convex,
            max_iterations,
        }),
        Command::ReproduceExample {
            example,
            m,
            n,
            xi,
            delta_grid,
        } => commands::reproduce::run(example, m, n.unwrap_or(m), xi, &delta_grid),
        Command::CheckBounds {
            family: BoundFamilyArg::InverseKkt,
            seeds,
            m_grid,
            delta_grid,
            delta_count,
            n,
            mu,
            xi_factor,
        } => commands::check_bounds::run(commands::check_bounds::Args {
            seeds: commands::parse_seeds(&seeds)?,
            m_grid,
            delta_grid,
            delta_count,
            n,
            mu,
            xi_factor,
        }),
        Command::Gradcheck {
            spec,
            points,
            seed,
            xi,
        } => commands::gradcheck::run(&spec, points, seed, xi),
        Command::SweepDelta {
            spec,
            xi,
            delta_grid,
            out,
        } => commands::sweep::run(&spec, xi, &delta_grid, out.as_deref()),
        Command::Generate {
            family,
            n,
            m,
            seed,
            mu,
            n_active,
            out,
        } => commands::generate::run(family, n, m, seed, mu, n_active, out.as_deref()),
    }
}
