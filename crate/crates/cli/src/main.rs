use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use safetyrace::RiskMode;
use safetyrace_cli::run::{claim_cmd, figure_cmd, solve_cmd, sweep_cmd};
use safetyrace_cli::{Exit, Options, Overrides};

/// Equilibria, sweeps and claim checks for the compute-race safety game.
#[derive(Debug, Parser)]
#[command(name = "safetyrace", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output file (report, CSV or failure table, depending on the command).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for grid points [default: available cores].
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Solver RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Outer convergence tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    /// Risk aggregation: multiplicative or winner.
    #[arg(long, global = true)]
    risk: Option<RiskMode>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one game and print the equilibrium report.
    Solve { config: PathBuf },
    /// Run the sweep section of a config and write CSV plus manifest.
    Sweep { config: PathBuf },
    /// Check a registered claim over its grid.
    Claim {
        name: String,
        /// Defaults to the shipped grid for the claim.
        config: Option<PathBuf>,
    },
    /// Run the shipped sweep behind figure 1 to 7.
    Figure { number: u8 },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(Exit::ConfigError as u8);
        }
    }
    let opts = Options {
        out: cli.out,
        overrides: Overrides {
            seed: cli.seed,
            tol: cli.tol,
            max_iters: cli.max_iters,
            risk: cli.risk,
        },
    };
    let result = match &cli.command {
        Command::Solve { config } => solve_cmd(config, &opts),
        Command::Sweep { config } => sweep_cmd(config, &opts),
        Command::Claim { name, config } => claim_cmd(name, config.as_deref(), &opts),
        Command::Figure { number } => figure_cmd(*number, &opts),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(Exit::ConfigError as u8)
        }
    }
}
