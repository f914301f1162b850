//! Allocation states and the ball placement rules.

mod place;
mod rank_index;
mod rng;
mod state;
mod weights;

pub use place::{
    chain_step, place_ball, place_ball_dmin, place_ball_left, place_ball_rank, run, throw_balls,
    throw_balls_observed, Placement, Placer,
};
pub use rank_index::Fenwick;
pub use rng::{RngContract, TrialRng};
pub use state::LoadState;
pub use weights::{EmpiricalWeights, WeightDistribution, WeightDraw};

use crate::error::{Error, Result};

/// How a ball chooses its bin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rule {
    /// Uniform bin.
    OneChoice,
    /// Lands in one of the `i` heaviest bins with probability `(i/n)^d`.
    /// Integer `d` samples `d` bins with replacement and takes the least
    /// loaded; fractional `d` (or `force_rank`) uses the inverse-CDF rank
    /// sampler.
    Greedy { d: f64, force_rank: bool },
    /// `d` contiguous groups of `n/d` bins, one uniform sample per group,
    /// ties to the leftmost group.
    Left { d: usize },
}

impl Rule {
    pub fn greedy(d: f64) -> Self {
        Rule::Greedy {
            d,
            force_rank: false,
        }
    }

    /// The `d` of the `(i/n)^d` characterisation; `Left[d]` reports its
    /// `Greedy[d]` counterpart.
    pub fn exponent(&self) -> f64 {
        match self {
            Rule::OneChoice => 1.0,
            Rule::Greedy { d, .. } => *d,
            Rule::Left { d } => *d as f64,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Rule::OneChoice => "one-choice",
            Rule::Greedy {
                force_rank: true, ..
            } => "greedy-rank",
            Rule::Greedy { .. } => "greedy",
            Rule::Left { .. } => "left",
        }
    }
}

/// An allocation rule together with the ball weight distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessSpec {
    rule: Rule,
    weights: WeightDistribution,
}

impl ProcessSpec {
    pub fn new(rule: Rule, weights: WeightDistribution) -> Result<Self> {
        match rule {
            Rule::Greedy { d, .. } if !(d.is_finite() && d >= 1.0) => {
                return Err(Error::invalid(format!("d must be ≥ 1, got {d}")))
            }
            Rule::Left { d } if d < 2 => {
                return Err(Error::invalid(format!("Left[d] needs d ≥ 2, got {d}")))
            }
            _ => {}
        }
        Ok(Self { rule, weights })
    }

    /// Unit-weight `Greedy[d]`.
    pub fn greedy(d: f64) -> Result<Self> {
        Self::new(Rule::greedy(d), WeightDistribution::Constant)
    }

    pub fn one_choice() -> Self {
        Self {
            rule: Rule::OneChoice,
            weights: WeightDistribution::Constant,
        }
    }

    /// Unit-weight `Left[d]`.
    pub fn left(d: usize) -> Result<Self> {
        Self::new(Rule::Left { d }, WeightDistribution::Constant)
    }

    pub fn with_weights(mut self, weights: WeightDistribution) -> Self {
        self.weights = weights;
        self
    }

    pub fn rule(&self) -> Rule {
        self.rule
    }

    pub fn weights(&self) -> &WeightDistribution {
        &self.weights
    }

    pub fn validate_bins(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::invalid("n must be ≥ 1"));
        }
        if n > u32::MAX as usize {
            return Err(Error::invalid("n must fit in 32 bits"));
        }
        if let Rule::Left { d } = self.rule {
            if !n.is_multiple_of(d) {
                return Err(Error::invalid(format!(
                    "Left[{d}] needs n divisible by d, got n = {n}"
                )));
            }
        }
        Ok(())
    }

    /// Rank probabilities `p_1..p_n` (rank 1 is the heaviest bin).
    pub fn rank_probabilities(&self, n: usize) -> Result<Vec<f64>> {
        match self.rule {
            Rule::OneChoice => rank_probabilities(1.0, n),
            Rule::Greedy { d, .. } => rank_probabilities(d, n),
            Rule::Left { .. } => Err(Error::Unsupported(
                "Left[d] has no state-independent rank distribution".into(),
            )),
        }
    }

    /// The `ε` of the balance assumption, `min(3/4 - (3/4)^d, 1/4 - (1/4)^d)`.
    /// Zero for one-choice.
    pub fn epsilon(&self) -> f64 {
        epsilon_for(self.rule.exponent())
    }
}

pub fn epsilon_for(d: f64) -> f64 {
    let upper = 1.0 - 0.75f64.powf(d) - 0.25;
    let lower = 0.25 - 0.25f64.powf(d);
    upper.min(lower).max(0.0)
}

fn cdf(i: usize, n: usize, d: f64) -> f64 {
    let r = i as f64 / n as f64;
    if d.fract() == 0.0 && d <= i32::MAX as f64 {
        r.powi(d as i32)
    } else {
        r.powf(d)
    }
}

/// Rank `i` in `1..=n` with `((i-1)/n)^d ≤ u < (i/n)^d`.
pub fn rank_sample(d: f64, n: usize, u: f64) -> Result<usize> {
    if !(d.is_finite() && d >= 1.0) {
        return Err(Error::invalid(format!("d must be ≥ 1, got {d}")));
    }
    if n < 1 {
        return Err(Error::invalid("n must be ≥ 1"));
    }
    if !(0.0..1.0).contains(&u) {
        return Err(Error::invalid(format!("u must lie in [0, 1), got {u}")));
    }
    let guess = (n as f64 * u.powf(1.0 / d)).ceil() as usize;
    let mut i = guess.clamp(1, n);
    while i < n && cdf(i, n, d) <= u {
        i += 1;
    }
    while i > 1 && cdf(i - 1, n, d) > u {
        i -= 1;
    }
    Ok(i)
}

/// `p_i = (i/n)^d - ((i-1)/n)^d` for `i = 1..=n`.
pub fn rank_probabilities(d: f64, n: usize) -> Result<Vec<f64>> {
    if !(d.is_finite() && d >= 1.0) {
        return Err(Error::invalid(format!("d must be ≥ 1, got {d}")));
    }
    if n < 1 {
        return Err(Error::invalid("n must be ≥ 1"));
    }
    Ok((1..=n).map(|i| cdf(i, n, d) - cdf(i - 1, n, d)).collect())
}
