//! Structural analysis of finite Markov decision processes.
//!
//! The crate solves finite-state finite-action MDPs exactly (backward
//! induction, value iteration, policy evaluation, brute-force policy
//! enumeration), mechanically verifies the condition sets under which an
//! optimal policy is monotone in the state — the textbook supermodularity
//! conditions and their interval-dominance relaxations — and certifies
//! instances with explicit coefficient schedules. Constructors reproduce a
//! collection of reference examples (sigmoidal and prospect-theory rewards,
//! perturbed bi-diagonal and tri-diagonal chains, an allocation problem with
//! penalty costs), and a small reinforcement-learning layer exploits the
//! differential sparsity of monotone policies through threshold search and a
//! rectified penalty on policy decreases.

pub mod allocation;
pub mod dominance;
mod error;
pub mod generators;
mod mat;
pub mod mdp;
pub mod model;
pub mod random;
pub mod rl;
pub mod structural;

pub use error::{Error, Result};
pub use mat::Mat;
pub use mdp::{
    brute_force_optimal, extract_monotone_selection, finite_horizon_dp, is_monotone,
    is_monotone_in, is_monotone_sequence, policy_evaluation, value_iteration, DiscountMode,
    FiniteMdp, MonotoneDirection, Objective, Policy,
};
