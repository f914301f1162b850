use crate::error::{Error, Result};
use crate::stats::clopper_pearson;

use super::GapSample;

/// Failure probability of the DKW band used by [`dominance_test`].
pub const DKW_DELTA: f64 = 0.01;

const MIN_TAIL_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailEstimate {
    pub hits: u64,
    pub total: u64,
    pub estimate: f64,
    /// 95% Clopper-Pearson interval.
    pub lower: f64,
    pub upper: f64,
}

/// Estimates `Pr[G ≥ k]` from at least 100 samples.
pub fn empirical_tail(samples: &[GapSample], k: f64) -> Result<TailEstimate> {
    if samples.len() < MIN_TAIL_SAMPLES {
        return Err(Error::invalid(format!(
            "tail estimate needs at least {MIN_TAIL_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let total = samples.len() as u64;
    let hits = samples.iter().filter(|s| s.gap >= k).count() as u64;
    let (lower, upper) = clopper_pearson(hits, total, 0.95);
    Ok(TailEstimate {
        hits,
        total,
        estimate: hits as f64 / total as f64,
        lower,
        upper,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DominanceVerdict {
    pub pass: bool,
    /// `band - max_k (F_late(k) - F_early(k))`; negative on failure.
    pub worst_margin: f64,
    pub band: f64,
    pub samples: usize,
}

/// One-sided empirical CDF test that `late` stochastically dominates
/// `early`: `F_late(k) ≤ F_early(k) + band` for every `k`, with the DKW band
/// `2·sqrt(ln(2/δ)/(2N))`.
pub fn dominance_test(early: &[f64], late: &[f64], delta: f64) -> Result<DominanceVerdict> {
    if early.is_empty() || early.len() != late.len() {
        return Err(Error::invalid(format!(
            "dominance test needs equal nonempty sample sets, got {} and {}",
            early.len(),
            late.len()
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("δ must lie in (0, 1), got {delta}")));
    }
    let n = early.len();
    let band = 2.0 * ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt();
    let mut a = early.to_vec();
    let mut b = late.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);

    // Sweep the merged support; at each point compare #{late ≤ k} with
    // #{early ≤ k}.
    let (mut i, mut j) = (0usize, 0usize);
    let mut worst = 0i64;
    while i < n || j < n {
        let k = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.min(*y),
            (Some(x), None) => *x,
            (None, Some(y)) => *y,
            (None, None) => unreachable!(),
        };
        while i < n && a[i] <= k {
            i += 1;
        }
        while j < n && b[j] <= k {
            j += 1;
        }
        worst = worst.max(j as i64 - i as i64);
    }
    let worst_margin = band - worst as f64 / n as f64;
    Ok(DominanceVerdict {
        pass: worst_margin >= 0.0,
        worst_margin,
        band,
        samples: n,
    })
}
