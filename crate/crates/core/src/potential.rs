//! Exponential potentials Φ = Σ e^{αx_i}, Ψ = Σ e^{-αx_i}, Γ = Φ + Ψ over a
//! normalised load vector, their exact expected one-ball drift, and the
//! drift inequality checks.
//!
//! Exact drift is available for `Greedy[d]` and one-choice, whose rank
//! distribution does not depend on the state. `Left[d]` uses
//! [`sampled_drift`].

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::process::{
    throw_balls, LoadState, Placer, ProcessSpec, RngContract, WeightDistribution,
};
use crate::stats::{linear_trend, mean_and_stderr, CompensatedSum, TrendFit};

/// Largest admissible `α·|x_i|`.
pub const EXPONENT_LIMIT: f64 = 700.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialParams {
    pub alpha: f64,
    pub epsilon: f64,
    pub s: f64,
    pub lambda: f64,
    manual: bool,
}

impl PotentialParams {
    /// `α = min(ε/(6S), λ/2)` from the process and its weights.
    pub fn derive(spec: &ProcessSpec) -> Result<Self> {
        let epsilon = spec.epsilon();
        if epsilon <= 0.0 {
            return Err(Error::invalid(format!(
                "{} has no positive ε; pass α explicitly",
                spec.rule().name()
            )));
        }
        let weights = spec.weights();
        let s = weights.s_bound();
        let lambda = weights.lambda();
        Ok(Self {
            alpha: (epsilon / (6.0 * s)).min(lambda / 2.0),
            epsilon,
            s,
            lambda,
            manual: false,
        })
    }

    /// Caller-chosen `α`; the lemma preconditions are not guaranteed.
    pub fn with_alpha(spec: &ProcessSpec, alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid(format!("α must be positive, got {alpha}")));
        }
        let weights = spec.weights();
        Ok(Self {
            alpha,
            epsilon: spec.epsilon(),
            s: weights.s_bound(),
            lambda: weights.lambda(),
            manual: true,
        })
    }

    pub fn is_manual(&self) -> bool {
        self.manual
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialReport {
    pub phi: f64,
    pub psi: f64,
    pub gamma: f64,
    pub gap: f64,
    /// `B = ½‖x‖₁`.
    pub half_l1: f64,
    pub n: usize,
}

impl PotentialReport {
    pub fn gamma_per_bin(&self) -> f64 {
        self.gamma / self.n as f64
    }
}

fn check_exponent(alpha: f64, max_abs: f64) -> Result<()> {
    let exponent = alpha * max_abs;
    if exponent > EXPONENT_LIMIT {
        return Err(Error::ExponentOverflow {
            exponent,
            limit: EXPONENT_LIMIT,
            alpha,
            max_abs,
        });
    }
    Ok(())
}

fn check_vector(x: &[f64], sorted: bool) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::invalid("empty load vector"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("load vector has non-finite entries"));
    }
    let max_abs = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sum: f64 = x.iter().copied().collect::<CompensatedSum>().value();
    if sum.abs() > 1e-9 * x.len() as f64 * max_abs.max(1.0) {
        return Err(Error::invalid(format!("load vector sums to {sum}, not 0")));
    }
    if sorted && x.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::invalid("load vector is not sorted nonincreasing"));
    }
    Ok(max_abs)
}

/// Per-bin `(e^{αx_i}, e^{-αx_i})`.
pub fn potential_terms(x: &[f64], alpha: f64) -> Result<Vec<(f64, f64)>> {
    let max_abs = check_vector(x, false)?;
    check_exponent(alpha, max_abs)?;
    Ok(x.iter()
        .map(|v| ((alpha * v).exp(), (-alpha * v).exp()))
        .collect())
}

fn report_from<I: Iterator<Item = f64>>(
    values: I,
    alpha: f64,
    n: usize,
    gap: f64,
) -> PotentialReport {
    let mut phi = CompensatedSum::new();
    let mut psi = CompensatedSum::new();
    let mut l1 = CompensatedSum::new();
    for v in values {
        phi.add((alpha * v).exp());
        psi.add((-alpha * v).exp());
        l1.add(v.abs());
    }
    let (phi, psi) = (phi.value(), psi.value());
    PotentialReport {
        phi,
        psi,
        gamma: phi + psi,
        gap,
        half_l1: 0.5 * l1.value(),
        n,
    }
}

/// Φ, Ψ, Γ and `B` of a normalised vector (any order).
pub fn potentials(x: &[f64], params: &PotentialParams) -> Result<PotentialReport> {
    let max_abs = check_vector(x, false)?;
    check_exponent(params.alpha, max_abs)?;
    let gap = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(report_from(x.iter().copied(), params.alpha, x.len(), gap))
}

/// Potentials of a state's normalised loads, without sorting.
pub fn state_potentials(state: &LoadState, alpha: f64) -> Result<PotentialReport> {
    let n = state.n();
    let gap = state.gap();
    let min = (0..n)
        .map(|i| state.normalized(i))
        .fold(f64::INFINITY, f64::min);
    check_exponent(alpha, gap.max(-min))?;
    Ok(report_from(
        (0..n).map(|i| state.normalized(i)),
        alpha,
        n,
        gap,
    ))
}

/// `M(z) - 1` for the weight distribution.
pub trait Mgf {
    fn mgf_minus_one(&self, z: f64) -> Result<f64>;
}

impl Mgf for WeightDistribution {
    fn mgf_minus_one(&self, z: f64) -> Result<f64> {
        WeightDistribution::mgf_minus_one(self, z)
    }
}

/// Exact `E[Φ(after one ball) - Φ(x)]` for sorted `x` and rank
/// probabilities `probs`:
/// `Σ_i e^{αx_i} [p_i (M(α(1-1/n)) - M(-α/n)) + M(-α/n) - 1]`.
pub fn drift_phi_with<M: Mgf + ?Sized>(
    x: &[f64],
    probs: &[f64],
    alpha: f64,
    mgf: &M,
) -> Result<f64> {
    exponential_drift(x, probs, alpha, mgf)
}

/// Exact `E[Ψ(after one ball) - Ψ(x)]`; the mirror of [`drift_phi_with`]
/// with `α` replaced by `-α`.
pub fn drift_psi_with<M: Mgf + ?Sized>(
    x: &[f64],
    probs: &[f64],
    alpha: f64,
    mgf: &M,
) -> Result<f64> {
    exponential_drift(x, probs, -alpha, mgf)
}

fn exponential_drift<M: Mgf + ?Sized>(x: &[f64], probs: &[f64], a: f64, mgf: &M) -> Result<f64> {
    let n = x.len();
    if probs.len() != n {
        return Err(Error::invalid(
            "rank probabilities and vector differ in length",
        ));
    }
    let max_abs = check_vector(x, true)?;
    check_exponent(a.abs(), max_abs)?;
    let inv_n = 1.0 / n as f64;
    let receive = mgf.mgf_minus_one(a * (1.0 - inv_n))?;
    let other = mgf.mgf_minus_one(-a * inv_n)?;
    let spread = receive - other;
    Ok(x.iter()
        .zip(probs)
        .map(|(v, p)| (a * v).exp() * (p * spread + other))
        .collect::<CompensatedSum>()
        .value())
}

fn greedy_probs(spec: &ProcessSpec, n: usize) -> Result<Vec<f64>> {
    spec.rank_probabilities(n).map_err(|e| {
        match e {
        Error::Unsupported(_) => Error::Unsupported(
            "exact drift needs a state-independent rank distribution; use sampled_drift for Left[d]"
                .into(),
        ),
        other => other,
    }
    })
}

pub fn exact_drift_phi(x: &[f64], spec: &ProcessSpec, params: &PotentialParams) -> Result<f64> {
    let probs = greedy_probs(spec, x.len())?;
    drift_phi_with(x, &probs, params.alpha, spec.weights())
}

pub fn exact_drift_psi(x: &[f64], spec: &ProcessSpec, params: &PotentialParams) -> Result<f64> {
    let probs = greedy_probs(spec, x.len())?;
    drift_psi_with(x, &probs, params.alpha, spec.weights())
}

/// Second-order upper bound on the Φ drift:
/// `Σ_i (p_i(α + Sα²) - (α/n - Sα²/n²)) e^{αx_i}`.
pub fn taylor_bound_phi(x: &[f64], probs: &[f64], params: &PotentialParams) -> f64 {
    let (a, s, n) = (params.alpha, params.s, x.len() as f64);
    x.iter()
        .zip(probs)
        .map(|(v, p)| (p * (a + s * a * a) - (a / n - s * a * a / (n * n))) * (a * v).exp())
        .collect::<CompensatedSum>()
        .value()
}

/// Second-order upper bound on the Ψ drift:
/// `Σ_i (p_i(-α + Sα²) + (α/n + Sα²/n²)) e^{-αx_i}`.
pub fn taylor_bound_psi(x: &[f64], probs: &[f64], params: &PotentialParams) -> f64 {
    let (a, s, n) = (params.alpha, params.s, x.len() as f64);
    x.iter()
        .zip(probs)
        .map(|(v, p)| (p * (-a + s * a * a) + (a / n + s * a * a / (n * n))) * (-a * v).exp())
        .collect::<CompensatedSum>()
        .value()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Check {
    Pass,
    Fail,
    /// Precondition on the state does not hold.
    Skipped,
}

impl Check {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Check::Pass
        } else {
            Check::Fail
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Check::Pass => "pass",
            Check::Fail => "fail",
            Check::Skipped => "skipped",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftVerdict {
    pub phi: f64,
    pub psi: f64,
    pub phi_drift: f64,
    pub psi_drift: f64,
    /// `E[ΔΦ] ≤ (2α/n)Φ`.
    pub phi_increase: Check,
    /// `E[ΔΨ] ≤ (2α/n)Ψ`.
    pub psi_increase: Check,
    /// `E[Φ'] ≤ (1 - αε/n)Φ + 1`, applicable when `x_{⌈3n/4⌉} ≤ 0`.
    pub phi_decrease: Check,
    /// `E[Ψ'] ≤ (1 - αε/n)Ψ + 1`, applicable when `x_{⌊n/4⌋} ≥ 0`.
    pub psi_decrease: Check,
    pub manual_alpha: bool,
}

impl DriftVerdict {
    pub fn any_failed(&self) -> bool {
        [
            self.phi_increase,
            self.psi_increase,
            self.phi_decrease,
            self.psi_decrease,
        ]
        .contains(&Check::Fail)
    }
}

// Absolute slack for rounding, relative to the potential's size.
const ROUNDING: f64 = 1e-12;

/// Evaluates the drift inequalities at one sorted normalised state.
pub fn check_drift_lemmas(
    x: &[f64],
    spec: &ProcessSpec,
    params: &PotentialParams,
) -> Result<DriftVerdict> {
    let n = x.len();
    let probs = greedy_probs(spec, n)?;
    let phi_drift = drift_phi_with(x, &probs, params.alpha, spec.weights())?;
    let psi_drift = drift_psi_with(x, &probs, params.alpha, spec.weights())?;
    let report = potentials(x, params)?;
    let (phi, psi) = (report.phi, report.psi);
    let (a, eps, nf) = (params.alpha, params.epsilon, n as f64);

    let phi_increase = Check::from_bool(phi_drift <= 2.0 * a / nf * phi + ROUNDING * phi);
    let psi_increase = Check::from_bool(psi_drift <= 2.0 * a / nf * psi + ROUNDING * psi);

    // 1-based x_{⌈3n/4⌉} and x_{max(1, ⌊n/4⌋)}.
    let upper_quarter = (3 * n).div_ceil(4).max(1);
    let lower_quarter = (n / 4).max(1);
    let phi_decrease = if x[upper_quarter - 1] <= 0.0 {
        Check::from_bool(phi + phi_drift <= (1.0 - a * eps / nf) * phi + 1.0 + ROUNDING * phi)
    } else {
        Check::Skipped
    };
    let psi_decrease = if x[lower_quarter - 1] >= 0.0 {
        Check::from_bool(psi + psi_drift <= (1.0 - a * eps / nf) * psi + 1.0 + ROUNDING * psi)
    } else {
        Check::Skipped
    };
    Ok(DriftVerdict {
        phi,
        psi,
        phi_drift,
        psi_drift,
        phi_increase,
        psi_increase,
        phi_decrease,
        psi_decrease,
        manual_alpha: params.is_manual(),
    })
}

/// A random sorted zero-sum integer vector. Three shapes are mixed: random
/// transfers between pairs of bins, a block of tall bins paid for by the
/// rest, and a block of deep holes filled by the rest; each gets small
/// transfer noise on top. Entries stay below `2^12` in magnitude.
pub fn random_zero_sum_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut x = vec![0i64; n];
    if n > 1 {
        match rng.random_range(0..3u32) {
            0 => transfers(&mut x, 2 * n, 1 << rng.random_range(0..7u32), rng),
            shape => {
                let k = rng.random_range(1..=(n / 4).max(1));
                let h = rng.random_range(1..=64i64);
                let sign = if shape == 1 { 1 } else { -1 };
                for v in &mut x[..k] {
                    *v = sign * h;
                }
                // Spread the balancing mass over the other n - k bins.
                let owed = k as i64 * h;
                let rest = (n - k) as i64;
                for (j, v) in x[k..].iter_mut().enumerate() {
                    *v = -sign * (owed / rest + i64::from((j as i64) < owed % rest));
                }
            }
        }
        transfers(&mut x, n, 2, rng);
    }
    let mut x: Vec<f64> = x.into_iter().map(|v| v as f64).collect();
    x.sort_by(|a, b| b.total_cmp(a));
    x
}

fn transfers<R: Rng + ?Sized>(x: &mut [i64], max_moves: usize, max_amp: i64, rng: &mut R) {
    let n = x.len();
    for _ in 0..rng.random_range(0..=max_moves) {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        let amp = rng.random_range(1..=max_amp);
        x[i] += amp;
        x[j] -= amp;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftEstimate {
    pub phi_mean: f64,
    pub phi_stderr: f64,
    pub psi_mean: f64,
    pub psi_stderr: f64,
    pub samples: usize,
}

/// Monte Carlo estimate of the one-ball drift of Φ and Ψ at `state`, for any
/// process including `Left[d]`.
pub fn sampled_drift<R: Rng + ?Sized>(
    state: &LoadState,
    spec: &ProcessSpec,
    params: &PotentialParams,
    samples: usize,
    rng: &mut R,
) -> Result<DriftEstimate> {
    if samples < 2 {
        return Err(Error::invalid("sampled drift needs at least 2 samples"));
    }
    let placer = Placer::for_spec(spec, state.n())?;
    if !state.accepts(spec.weights()) {
        return Err(Error::invalid("state storage does not match the weights"));
    }
    let mut state = state.clone();
    state.ensure_rank_index();
    let alpha = params.alpha;
    let report = state_potentials(&state, alpha)?;
    let n = state.n() as f64;
    let weights = spec.weights();
    let mut dphi = Vec::with_capacity(samples);
    let mut dpsi = Vec::with_capacity(samples);
    for _ in 0..samples {
        let bin = placer.choose(&state, rng);
        let w = weights.sample(rng);
        let xj = state.normalized(bin);
        let shift = alpha * w / n;
        dphi.push(
            report.phi * (-shift).exp_m1() + (alpha * xj - shift).exp() * (alpha * w).exp_m1(),
        );
        dpsi.push(report.psi * shift.exp_m1() + (shift - alpha * xj).exp() * (-alpha * w).exp_m1());
    }
    let (phi_mean, phi_stderr) = mean_and_stderr(&dphi);
    let (psi_mean, psi_stderr) = mean_and_stderr(&dpsi);
    Ok(DriftEstimate {
        phi_mean,
        phi_stderr,
        psi_mean,
        psi_stderr,
        samples,
    })
}

/// Ball counts `start, start·ratio, ...` (rounded, deduplicated) ending
/// exactly at `end`.
pub fn geometric_checkpoints(start: u64, end: u64, ratio: f64) -> Vec<u64> {
    assert!(start >= 1 && end >= start && ratio > 1.0);
    let mut out = Vec::new();
    let mut t = start as f64;
    while t < end as f64 {
        let c = t.round() as u64;
        if out.last() != Some(&c) {
            out.push(c);
        }
        t *= ratio;
    }
    if out.last() != Some(&end) {
        out.push(end);
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaProbe {
    pub checkpoints: Vec<u64>,
    /// `per_trial[k][c]` is Γ/n of trial `k` at checkpoint `c`.
    pub per_trial: Vec<Vec<f64>>,
    /// Mean Γ/n across trials at each checkpoint.
    pub mean_gamma_per_n: Vec<f64>,
    pub max_mean: f64,
    pub max_single: f64,
    /// Least-squares trend of mean Γ/n against ln t over the positive
    /// checkpoints.
    pub trend: Option<TrendFit>,
}

/// Runs `trials` independent chains and records Γ/n at each checkpoint.
pub fn gamma_supermartingale_probe(
    spec: &ProcessSpec,
    params: &PotentialParams,
    n: usize,
    checkpoints: &[u64],
    trials: u64,
    contract: RngContract,
) -> Result<GammaProbe> {
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("checkpoints must be strictly increasing"));
    }
    if trials == 0 {
        return Err(Error::invalid("trials must be ≥ 1"));
    }
    spec.validate_bins(n)?;
    let per_trial: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<Vec<f64>> {
            let mut rng = contract.stream(trial);
            let mut state = LoadState::empty(n, spec.weights())?;
            let mut out = Vec::with_capacity(checkpoints.len());
            for &cp in checkpoints {
                let pending = cp - state.balls_thrown();
                throw_balls(&mut state, spec, pending, &mut rng)?;
                out.push(state_potentials(&state, params.alpha)?.gamma_per_bin());
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let k = checkpoints.len();
    let mean_gamma_per_n: Vec<f64> = (0..k)
        .map(|c| per_trial.iter().map(|t| t[c]).sum::<f64>() / trials as f64)
        .collect();
    let max_mean = mean_gamma_per_n
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let max_single = per_trial
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let (xs, ys): (Vec<f64>, Vec<f64>) = checkpoints
        .iter()
        .zip(&mean_gamma_per_n)
        .filter(|(t, _)| **t > 0)
        .map(|(t, y)| ((*t as f64).ln(), *y))
        .unzip();
    let trend = if xs.len() >= 3 {
        Some(linear_trend(&xs, &ys)?)
    } else {
        None
    };
    Ok(GammaProbe {
        checkpoints: checkpoints.to_vec(),
        per_trial,
        mean_gamma_per_n,
        max_mean,
        max_single,
        trend,
    })
}
