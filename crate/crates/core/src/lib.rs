//! Balanced-allocation processes (`Greedy[d]`, `Left[d]`, one-choice, weighted
//! balls), exponential potential functions with exact one-ball drift, and
//! Monte Carlo harnesses that check gap, drift, layered-induction and
//! stochastic-dominance properties of those processes.
//!
//! The crate is organised as:
//!
//! * [`process`]: load states, process specifications, weight distributions,
//!   the seeded stream contract and the ball placement rules.
//! * [`potential`]: Φ, Ψ, Γ and their exact expected drift, plus the drift
//!   inequality checks and the Γ boundedness probe.
//! * [`analysis`]: gap statistics, ν profiles, β schedules, the two-phase
//!   (black/red) experiment, tail and dominance tests, `Left[d]` constants and
//!   weight quantiles.
//! * [`experiment`]: declarative configs, deterministic trial-parallel
//!   execution and CSV/JSON emission.

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod potential;
pub mod process;
pub mod stats;

pub use error::{Error, Result};
pub use process::{
    LoadState, Placement, ProcessSpec, RngContract, Rule, TrialRng, WeightDistribution,
};
