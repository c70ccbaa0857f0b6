//! `uniform-capacity`: solve, verify and sweep the cost-constrained uniform
//! noise channel from the command line.
//!
//! Exit codes: 0 when every output was written (and, for `verify`, the
//! conditions hold), 1 when `verify` fails, 2 on invalid input or I/O errors.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use commands::{OracleArgs, PhaseArgs, SolveArgs, SweepArgs, VerifyArgs};

const THREADS_ENV: &str = "UNIFORM_CAPACITY_THREADS";

#[derive(Debug, Parser)]
#[command(name = "uniform-capacity", version, about = "Capacity-achieving inputs of the uniform noise channel under amplitude and cost constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ChannelArgs {
    /// Inverse noise width r = 1/(2b).
    #[arg(long)]
    r: f64,
    /// Cost exponent α in c(x) = x^α.
    #[arg(long)]
    alpha: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form (or, for full support, numeric) capacity-achieving input.
    Solve {
        #[command(flatten)]
        channel: ChannelArgs,
        /// Cost budget c̄.
        #[arg(long)]
        cbar: f64,
        /// Oracle grid for the full-support regime.
        #[arg(long, default_value_t = 241)]
        grid: usize,
        /// Also report capacities in bits.
        #[arg(long)]
        bits: bool,
        #[arg(long, short, default_value = "solve.json")]
        out: PathBuf,
    },
    /// Check the optimality conditions for a `solve` or `oracle` document.
    Verify {
        /// JSON produced by `solve` or `oracle`.
        input: PathBuf,
        #[arg(long)]
        eq_tol: Option<f64>,
        #[arg(long)]
        ineq_tol: Option<f64>,
        #[arg(long, default_value_t = 10_001)]
        check_grid: usize,
        /// Also write both sides of the optimality condition on the check grid as CSV.
        #[arg(long)]
        curve: Option<PathBuf>,
        #[arg(long, short, default_value = "verify.json")]
        out: PathBuf,
    },
    /// Constrained Blahut–Arimoto on a uniform input grid.
    Oracle {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long)]
        cbar: f64,
        #[arg(long, default_value_t = 241)]
        grid: usize,
        #[arg(long, default_value_t = 20_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-10)]
        conv_tol: f64,
        #[arg(long)]
        bits: bool,
        #[arg(long, short, default_value = "oracle.json")]
        out: PathBuf,
    },
    /// Budgets at which the support loses its even points (α ≤ 1, r not integer).
    Thresholds {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, short, default_value = "thresholds.json")]
        out: PathBuf,
    },
    /// Mass points as a function of r, one CSV row per point.
    SweepR {
        #[arg(long)]
        r_min: f64,
        #[arg(long)]
        r_max: f64,
        #[arg(long, default_value_t = 81)]
        steps: usize,
        #[arg(long)]
        alpha: f64,
        /// Cost budget; omit for the unconstrained optimum.
        #[arg(long)]
        cbar: Option<f64>,
        #[arg(long, default_value_t = 241)]
        grid: usize,
        #[arg(long, short, default_value = "sweep_r.csv")]
        out: PathBuf,
    },
    /// Regime map over the (α, c̄) plane at fixed r.
    Phase {
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 0.1)]
        alpha_min: f64,
        #[arg(long, default_value_t = 2.0)]
        alpha_max: f64,
        #[arg(long, default_value_t = 0.01)]
        cbar_min: f64,
        #[arg(long, default_value_t = 1.0)]
        cbar_max: f64,
        #[arg(long, default_value_t = 50)]
        resolution: usize,
        #[arg(long, short, default_value = "phase.csv")]
        out: PathBuf,
    },
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("{THREADS_ENV} must be a positive integer, got {v:?}"))?;
        anyhow::ensure!(n > 0, "{THREADS_ENV} must be positive");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    configure_threads()?;
    match cli.command {
        Command::Solve {
            channel,
            cbar,
            grid,
            bits,
            out,
        } => commands::solve(
            &SolveArgs {
                r: channel.r,
                alpha: channel.alpha,
                cbar,
                grid,
                bits,
            },
            &out,
        ),
        Command::Verify {
            input,
            eq_tol,
            ineq_tol,
            check_grid,
            curve,
            out,
        } => commands::verify(
            &input,
            &VerifyArgs {
                eq_tol,
                ineq_tol,
                check_grid,
                curve,
            },
            &out,
        ),
        Command::Oracle {
            channel,
            cbar,
            grid,
            max_iter,
            conv_tol,
            bits,
            out,
        } => commands::oracle(
            &OracleArgs {
                r: channel.r,
                alpha: channel.alpha,
                cbar,
                grid,
                max_iter,
                conv_tol,
                bits,
            },
            &out,
        ),
        Command::Thresholds { channel, out } => commands::thresholds(channel.r, channel.alpha, &out),
        Command::SweepR {
            r_min,
            r_max,
            steps,
            alpha,
            cbar,
            grid,
            out,
        } => commands::sweep_r(
            &SweepArgs {
                r_min,
                r_max,
                steps,
                alpha,
                cbar,
                grid,
            },
            &out,
        ),
        Command::Phase {
            r,
            alpha_min,
            alpha_max,
            cbar_min,
            cbar_max,
            resolution,
            out,
        } => commands::phase(
            &PhaseArgs {
                r,
                alpha: (alpha_min, alpha_max),
                cbar: (cbar_min, cbar_max),
                resolution,
            },
            &out,
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
