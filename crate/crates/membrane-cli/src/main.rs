//! `membrane`: evolve axially symmetric minimal-surface initial data,
//! sweep parameter grids, run refinement studies, integrate the
//! homogeneous reference system, and diagnose finished runs.
//!
//! Exit codes: 0 for any completed command (including runs that end in a
//! breakdown — that is the object of study), 2 for configuration errors,
//! 3 for internal invariant violations.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use membrane_cli::commands::{self, oracle::OracleArgs};
use membrane_cli::pipeline::{PipelineError, DEFAULT_RESIDUAL_BUDGET};

#[derive(Parser)]
#[command(name = "membrane", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configured evolution and write its run directory.
    Evolve {
        /// TOML run configuration.
        config: PathBuf,
    },
    /// Run a cartesian parameter sweep over a template configuration.
    Sweep {
        /// TOML run configuration used as the base for every row.
        template: PathBuf,
        /// TOML file whose [grid] table holds arrays of override values
        /// keyed by dotted config paths (e.g. "family.rho0").
        grid: PathBuf,
        /// Root directory for per-row run outputs and summary.csv.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Refinement study: the same physics at doubling resolutions.
    Convergence {
        /// TOML run configuration; its t_end sets the comparison window.
        config: PathBuf,
        /// Comma-separated doubling chain, e.g. 64,128,256 (at least 3).
        #[arg(long, value_delimiter = ',', required = true)]
        resolutions: Vec<usize>,
    },
    /// Integrate the homogeneous reference system and print its collapse
    /// time.
    Oracle {
        /// Initial-data family; only "clifford" evolves homogeneously.
        family: String,
        /// Family parameters as key=value pairs, e.g. rho0=1 a0=1.
        params: Vec<String>,
        /// Integration horizon.
        #[arg(long, default_value_t = 50.0)]
        t_end: f64,
        /// Adaptive step error tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Write the trajectory to this CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Reclassify a finished run directory from its persisted diagnostics.
    Diagnose {
        /// Run directory containing forward/ and/or backward/ outputs.
        run_dir: PathBuf,
        /// Gauge-residual budget separating shrink-driven breakdowns from
        /// suspected regularity loss.
        #[arg(long, default_value_t = DEFAULT_RESIDUAL_BUDGET)]
        budget: f64,
    },
}

fn dispatch(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Evolve { config } => commands::evolve::run(&config),
        Command::Sweep { template, grid, output_dir } => {
            commands::sweep::run(&template, &grid, output_dir.as_deref())
        }
        Command::Convergence { config, resolutions } => {
            commands::convergence::run(&config, &resolutions)
        }
        Command::Oracle { family, params, t_end, tol, csv } => {
            commands::oracle::run(&OracleArgs {
                family: &family,
                params: &params,
                t_end,
                tol,
                csv: csv.as_deref(),
            })
        }
        Command::Diagnose { run_dir, budget } => commands::diagnose::run(&run_dir, budget),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli.command) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
