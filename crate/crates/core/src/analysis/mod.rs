//! Statistics over allocation states and gap samples.

mod constants;
mod induction;
mod tail;

pub use constants::{
    fibonacci_base, left_layer_fractions, quantile_target, weight_quantile_at, weight_quantile_m,
    LeftLayers,
};
pub use induction::{
    beta_schedule, two_phase_experiment, two_phase_trials, BetaSchedule, TwoPhaseRecord,
    TwoPhaseSummary, DEFAULT_C_PRIME,
};
pub use tail::{dominance_test, empirical_tail, DominanceVerdict, TailEstimate, DKW_DELTA};

use serde::{Deserialize, Serialize};

use crate::process::LoadState;

/// The gap of one trial at one checkpoint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapSample {
    pub trial: u64,
    /// Balls thrown.
    pub checkpoint: u64,
    pub gap: f64,
    pub gamma_per_n: Option<f64>,
}

/// Maximum load minus average load.
pub fn gap(state: &LoadState) -> f64 {
    state.gap()
}

/// `ν_i` for `i = 0, 1, ...`: the fraction of bins whose load is at least
/// `average + i`. The last entry is the first zero.
pub fn nu_fractions(state: &LoadState) -> Vec<f64> {
    let n = state.n();
    let heights: Vec<f64> = (0..n).map(|b| state.normalized(b)).collect();
    let mut nu = Vec::new();
    for level in 0u64.. {
        let count = heights.iter().filter(|&&h| h >= level as f64).count();
        nu.push(count as f64 / n as f64);
        if count == 0 {
            break;
        }
    }
    nu
}
