//! Compute-race safety game.
//!
//! Players split purchased compute between safety and performance. This
//! crate evaluates the model, solves for pure-strategy Nash equilibria by
//! iterated best response, and runs the sweep and claim experiments built on
//! top of the solver.

pub mod error;
pub mod lab;
pub mod model;
pub mod solver;

pub use error::{Error, Result};
pub use model::{
    aggregate_safety, contest_probs, evaluate, payoff, performance, safety, scaling_exponent,
    Belief, BeliefProfile, BeliefScope, Outcome, ParamField, PlayerParams, ProblemSpec, RiskMode,
    StrategyProfile,
};
pub use solver::{
    best_response, oracle_solve, solve, verify_equilibrium, EquilibriumResult, SolverConfig,
    UpdateScheme,
};
