//! `monomdp`: solve, check, generate, and learn on finite-MDP models stored
//! as JSON documents. Outputs are plain UTF-8 CSV and text files written
//! atomically (temp file + rename).
//!
//! Exit codes: 0 success, 2 input/schema error, 3 numerical failure,
//! 4 size guard exceeded.

mod commands;
mod io_util;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "monomdp",
    version,
    about = "Finite-MDP structural-analysis toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a model by backward induction or value iteration; writes
    /// q.csv (k,x,a,Q) and value.csv (k,x,V,mu) into the output directory.
    Solve {
        #[arg(long)]
        input: PathBuf,
        /// Backward-induction horizon; conflicts with --tol.
        #[arg(long)]
        horizon: Option<usize>,
        /// Value-iteration tolerance (infinite horizon); conflicts with --horizon.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        max_iter: usize,
        /// Multiply the expectation term by the discount factor (default: yes
        /// exactly when the model carries a discount).
        #[arg(long)]
        discounted_backup: Option<bool>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify a condition set and write the report as a text document.
    Check {
        #[arg(long)]
        input: PathBuf,
        /// One of: 1, 2, cor1, cor2, cor3, cor4, cor5, thm3.
        #[arg(long)]
        theorem: String,
        /// Coefficient-schedule mode preference: uniform (with pairwise
        /// fallback) or pairwise.
        #[arg(long, default_value = "uniform")]
        mode: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a built-in example instance as a model document.
    Example {
        /// toy | sigmoidal | ex1 | prospect | delta | ex3 | perturbed-bidiagonal |
        /// bidiag | concave-bidiagonal | tridiag | ross-i | ross-ii
        #[arg(long)]
        name: String,
        #[arg(long, short = 'X')]
        num_states: Option<usize>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        discount: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Volatility split state of the drift-shift constructions.
        #[arg(long)]
        split: Option<usize>,
        /// Base success probability of the allocation cases.
        #[arg(long)]
        theta1: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Q-difference curves Q(x,a) - Q(x,1) at the first stage, as CSV.
    Figure {
        /// ex1 | toy | ex3 | bidiag | tridiag | ross-i | ross-ii
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reinforcement learning on the model as a simulator.
    Rl {
        #[arg(long)]
        input: PathBuf,
        /// qlearn | threshold
        #[arg(long)]
        algo: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Q-learning step count.
        #[arg(long)]
        steps: Option<usize>,
        /// Threshold-search episode budget.
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Episode horizon for simulated returns.
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Brute-force policy enumeration and monotone-membership report.
    Oracle {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = monotone_mdp::mdp::DEFAULT_BRUTE_FORCE_GUARD)]
        guard: u128,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve {
            input,
            horizon,
            tol,
            max_iter,
            discounted_backup,
            out,
        } => commands::solve(&input, horizon, tol, max_iter, discounted_backup, &out),
        Command::Check {
            input,
            theorem,
            mode,
            out,
        } => commands::check(&input, &theorem, &mode, out.as_deref()),
        Command::Example {
            name,
            num_states,
            horizon,
            discount,
            epsilon,
            split,
            theta1,
            out,
        } => commands::example(
            &name,
            commands::ExampleOverrides {
                num_states,
                horizon,
                discount,
                epsilon,
                split,
                theta1,
            },
            &out,
        ),
        Command::Figure { name, out } => commands::figure(&name, &out),
        Command::Rl {
            input,
            algo,
            seed,
            steps,
            budget,
            lambda,
            horizon,
            out,
        } => commands::rl(&input, &algo, seed, steps, budget, lambda, horizon, &out),
        Command::Oracle { input, guard, out } => commands::oracle(&input, guard, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.code)
        }
    }
}
