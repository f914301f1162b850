use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::process::{throw_balls, throw_balls_observed, LoadState, ProcessSpec, RngContract};

/// Default `c′ = 3(c + 1)` with `c = 1`.
pub const DEFAULT_C_PRIME: f64 = 6.0;

/// Doubly exponential bounds on the fraction of bins at each height,
/// floored at `2c′ ln n / n`.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaSchedule {
    pub l: f64,
    pub ell: u32,
    pub c_prime: f64,
    pub n: u64,
    pub d: f64,
    pub i_low: u32,
    pub i_high: u32,
    pub floor: f64,
    /// `beta[k]` is the bound at height `i_low + k`, for `k = 0..=i_high - i_low`.
    pub beta: Vec<f64>,
    /// The recurrence without the floor.
    pub unfloored: Vec<f64>,
}

impl BetaSchedule {
    /// `ln β_{i_low + k}` from the closed form
    /// `d^k·b₀ + ln(2L)(d^k - 1)/(d - 1)` with `b₀ = -ln 8 - 3 ln L/(d - 1)`.
    pub fn closed_form_ln(&self, k: u32) -> f64 {
        let dk = self.d.powi(k as i32);
        let b0 = -(8.0f64).ln() - 3.0 / (self.d - 1.0) * self.l.ln();
        dk * b0 + (2.0 * self.l).ln() * (dk - 1.0) / (self.d - 1.0)
    }

    /// Number of leading terms the floor has not touched.
    pub fn unsnapped_len(&self) -> usize {
        self.beta
            .iter()
            .zip(&self.unfloored)
            .take_while(|(b, u)| b == u)
            .count()
    }

    /// Largest relative error between `ln β` and the closed form over the
    /// unsnapped, nonzero terms.
    pub fn closed_form_error(&self) -> f64 {
        self.unfloored
            .iter()
            .take(self.unsnapped_len())
            .enumerate()
            .filter(|(_, b)| **b > 0.0)
            .map(|(k, b)| {
                let exact = self.closed_form_ln(k as u32);
                ((b.ln() - exact) / exact).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Whether the last term sits on the floor.
    pub fn reaches_floor(&self) -> bool {
        self.beta.last() == Some(&self.floor)
    }
}

/// Builds the schedule with `i_low = ℓ` and `i_high = i_low + ⌈ln ln n / ln d⌉`.
/// Requires `1 ≤ ℓ ≤ L ≤ n^{1/4}` and `d > 1`.
pub fn beta_schedule(l: f64, ell: u32, c_prime: f64, n: u64, d: f64) -> Result<BetaSchedule> {
    let mut problems = Vec::new();
    if !(d.is_finite() && d > 1.0) {
        problems.push(format!("d must be > 1, got {d}"));
    }
    if ell < 1 {
        problems.push("ℓ must be ≥ 1".to_string());
    }
    if !(l.is_finite() && l >= ell as f64) {
        problems.push(format!("L must be ≥ ℓ = {ell}, got {l}"));
    }
    if n < 16 {
        problems.push(format!("n must be ≥ 16, got {n}"));
    } else if l.powi(4) > n as f64 {
        problems.push(format!(
            "L = {l} exceeds n^(1/4) = {:.6}",
            (n as f64).powf(0.25)
        ));
    }
    if !(c_prime.is_finite() && c_prime > 0.0) {
        problems.push(format!("c′ must be positive, got {c_prime}"));
    }
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }

    let nf = n as f64;
    let steps = (nf.ln().ln() / d.ln()).ceil().max(1.0) as u32;
    let floor = 2.0 * c_prime * nf.ln() / nf;
    let mut unfloored = vec![1.0 / (8.0 * l.powf(3.0 / (d - 1.0)))];
    let mut beta = vec![unfloored[0]];
    for _ in 0..steps {
        let prev_raw = *unfloored.last().unwrap();
        unfloored.push(2.0 * l * prev_raw.powf(d));
        let prev = *beta.last().unwrap();
        beta.push((2.0 * l * prev.powf(d)).max(floor));
    }
    Ok(BetaSchedule {
        l,
        ell,
        c_prime,
        n,
        d,
        i_low: ell,
        i_high: ell + steps,
        floor,
        beta,
        unfloored,
    })
}

/// One run of the black/red experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoPhaseRecord {
    /// Gap after the black phase.
    pub gap_at_t: f64,
    pub gap_final: f64,
    /// Whether the black-phase gap is below `L`.
    pub applicable: bool,
    /// `ν_i` at the end, `i = 0, 1, ...`.
    pub nu: Vec<f64>,
    /// `μ_i`: red balls whose height at placement, measured against the
    /// final average, is at least `i`.
    pub mu: Vec<u64>,
    /// Levels where `ν_i·n > μ_i`.
    pub violations: Vec<usize>,
}

impl TwoPhaseRecord {
    pub fn violated(&self) -> bool {
        self.applicable && !self.violations.is_empty()
    }
}

/// Throws `t·n` black balls, then `l·n` red balls, and compares the final
/// height profile with the heights at which red balls landed. Unit weights
/// only; `t` and `l` are in chain steps.
pub fn two_phase_experiment<R: Rng + ?Sized>(
    spec: &ProcessSpec,
    n: usize,
    t: u64,
    l: u64,
    rng: &mut R,
) -> Result<TwoPhaseRecord> {
    if !spec.weights().is_constant() {
        return Err(Error::invalid(
            "the two-phase experiment needs unit weights",
        ));
    }
    if l == 0 {
        return Err(Error::invalid("L must be ≥ 1"));
    }
    spec.validate_bins(n)?;
    let mut state = LoadState::empty(n, spec.weights())?;
    throw_balls(&mut state, spec, t * n as u64, rng)?;
    let gap_at_t = state.gap();

    let mut heights = Vec::with_capacity(l as usize * n);
    throw_balls_observed(&mut state, spec, l * n as u64, rng, |p, s| {
        let (bins, _) = s.unit_loads().expect("unit weights");
        heights.push(bins[p.bin]);
    })?;

    let (bins, _) = state.unit_loads().expect("unit weights");
    let average = t + l;
    let top = bins.iter().max().copied().unwrap_or(0) - average;
    let mut nu = Vec::new();
    let mut mu = Vec::new();
    let mut violations = Vec::new();
    for i in 0..=top + 1 {
        let level = average + i;
        let bins_at = bins.iter().filter(|&&b| b >= level).count();
        let red_at = heights.iter().filter(|&&h| h >= level).count() as u64;
        if bins_at as u64 > red_at {
            violations.push(i as usize);
        }
        nu.push(bins_at as f64 / n as f64);
        mu.push(red_at);
    }
    Ok(TwoPhaseRecord {
        gap_at_t,
        gap_final: state.gap(),
        applicable: gap_at_t < l as f64,
        nu,
        mu,
        violations,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoPhaseSummary {
    pub records: Vec<TwoPhaseRecord>,
    pub applicable: usize,
    /// Applicable trials with at least one violated level.
    pub violating: usize,
}

/// Runs [`two_phase_experiment`] for `trials` independent streams.
pub fn two_phase_trials(
    spec: &ProcessSpec,
    n: usize,
    t: u64,
    l: u64,
    trials: u64,
    contract: RngContract,
) -> Result<TwoPhaseSummary> {
    let records = (0..trials)
        .into_par_iter()
        .map(|trial| {
            two_phase_experiment(spec, n, t, l, &mut contract.stream(trial)).map_err(|e| {
                Error::Trial {
                    trial,
                    source: Box::new(e),
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let applicable = records.iter().filter(|r| r.applicable).count();
    let violating = records.iter().filter(|r| r.violated()).count();
    Ok(TwoPhaseSummary {
        records,
        applicable,
        violating,
    })
}
