use crate::error::{Error, Result};
use crate::process::{LoadState, ProcessSpec, Rule, WeightDistribution};

/// Growth rate of the order-`d` Fibonacci sequence
/// `F(k) = F(k-1) + ... + F(k-d)`, by iterating the ratio of successive
/// terms until it stops changing.
pub fn fibonacci_base(d: u32) -> Result<f64> {
    if d < 2 {
        return Err(Error::invalid(format!("d must be ≥ 2, got {d}")));
    }
    let d = d as usize;
    let mut window = vec![1.0f64; d];
    let mut ratio = 1.0f64;
    let mut stable = 0;
    for step in 0..1_000_000usize {
        let next: f64 = window.iter().sum();
        let last = window[(step + d - 1) % d];
        let r = next / last;
        window[step % d] = next;
        if (r - ratio).abs() <= 1e-15 * r {
            stable += 1;
            if stable >= 2 * d {
                return Ok(r);
            }
        } else {
            stable = 0;
        }
        ratio = r;
        if next > 1e200 {
            window.iter_mut().for_each(|v| *v /= next);
        }
    }
    Ok(ratio)
}

/// Fractions `X_{jd+k}/n`: `levels[j][k]` is the share of all `n` bins that
/// lie in group `k` and have load at least `base_level + j` (in weight
/// units). Levels below `base_level` are full: `1/d` each.
#[derive(Clone, Debug, PartialEq)]
pub struct LeftLayers {
    pub d: usize,
    pub base_level: u64,
    pub levels: Vec<Vec<f64>>,
}

impl LeftLayers {
    /// Flattened `x_{jd+k}` in index order.
    pub fn flattened(&self) -> Vec<f64> {
        self.levels.iter().flatten().copied().collect()
    }
}

pub fn left_layer_fractions(state: &LoadState, spec: &ProcessSpec) -> Result<LeftLayers> {
    let Rule::Left { d } = spec.rule() else {
        return Err(Error::invalid(format!(
            "layer fractions need a Left[d] process, got {}",
            spec.rule().name()
        )));
    };
    let n = state.n();
    if !n.is_multiple_of(d) {
        return Err(Error::invalid(format!(
            "n = {n} is not divisible by d = {d}"
        )));
    }
    let Some((bins, _)) = state.unit_loads() else {
        return Err(Error::Unsupported(
            "layer fractions need integral weight units".into(),
        ));
    };
    let group = n / d;
    let base = bins.iter().copied().min().unwrap_or(0);
    let top = bins.iter().copied().max().unwrap_or(0);
    let levels = (base..=top)
        .map(|level| {
            (0..d)
                .map(|k| {
                    bins[k * group..(k + 1) * group]
                        .iter()
                        .filter(|&&b| b >= level)
                        .count() as f64
                        / n as f64
                })
                .collect()
        })
        .collect();
    Ok(LeftLayers {
        d,
        base_level: base,
        levels,
    })
}

/// Tail target `1/(s·(ln ln n)^5)`.
pub fn quantile_target(s: f64, n: u64) -> Result<f64> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::invalid(format!("s must be positive, got {s}")));
    }
    if n < 16 {
        return Err(Error::invalid(format!("n must be ≥ 16, got {n}")));
    }
    Ok(1.0 / (s * (n as f64).ln().ln().powi(5)))
}

/// Smallest `M` with `Pr[W ≥ M'] ≤ q` for every `M' > M`: the smallest
/// support point whose strict upper tail is at most `q`, or `-ln q` for the
/// exponential distribution. `q ≥ 1` gives the minimum weight.
pub fn weight_quantile_at(dist: &WeightDistribution, q: f64) -> f64 {
    if q >= 1.0 {
        return dist.min_weight();
    }
    match dist {
        WeightDistribution::Exponential => -q.ln(),
        _ => {
            let (values, _) = dist.support();
            values
                .into_iter()
                .find(|&v| dist.strict_upper_tail(v) <= q)
                .expect("the largest support point has an empty upper tail")
        }
    }
}

/// [`weight_quantile_at`] for the target `1/(s·(ln ln n)^5)`.
pub fn weight_quantile_m(dist: &WeightDistribution, s: f64, n: u64) -> Result<f64> {
    Ok(weight_quantile_at(dist, quantile_target(s, n)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Largest root of x^{d+1} - 2x^d + 1 in (1.5, 2), by bisection.
    fn root_by_bisection(d: i32) -> f64 {
        let f = |x: f64| x.powi(d + 1) - 2.0 * x.powi(d) + 1.0;
        let (mut lo, mut hi) = (1.5f64, 2.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn golden_ratio() {
        let phi = fibonacci_base(2).unwrap();
        assert!((phi - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn matches_characteristic_root() {
        for d in 2..=16 {
            let got = fibonacci_base(d).unwrap();
            let oracle = root_by_bisection(d as i32);
            assert!((got - oracle).abs() < 1e-10, "d = {d}: {got} vs {oracle}");
        }
    }

    #[test]
    fn increasing_and_below_two() {
        let values: Vec<f64> = (2..=16).map(|d| fibonacci_base(d).unwrap()).collect();
        assert!(values[0] >= 1.61);
        assert!(values.windows(2).all(|w| w[0] < w[1]));
        assert!(values.iter().all(|&v| v < 2.0));
    }

    #[test]
    fn rejects_small_order() {
        assert!(fibonacci_base(1).is_err());
    }

    #[test]
    fn empty_left_state_is_one_over_d_per_group() {
        let spec = ProcessSpec::left(4).unwrap();
        let state = LoadState::empty(16, spec.weights()).unwrap();
        let layers = left_layer_fractions(&state, &spec).unwrap();
        assert_eq!(layers.levels, vec![vec![0.25; 4]]);
    }

    #[test]
    fn layers_are_nonincreasing_in_level() {
        let spec = ProcessSpec::left(2).unwrap();
        let state = LoadState::from_unit_loads(vec![3, 1, 2, 2, 0, 5, 1, 1]).unwrap();
        let layers = left_layer_fractions(&state, &spec).unwrap();
        assert_eq!(layers.base_level, 0);
        assert_eq!(layers.levels[1], vec![4.0 / 8.0, 3.0 / 8.0]);
        for k in 0..2 {
            assert!(layers.levels.windows(2).all(|w| w[0][k] >= w[1][k]));
        }
    }

    #[test]
    fn greedy_state_is_rejected() {
        let spec = ProcessSpec::greedy(2.0).unwrap();
        let state = LoadState::empty(8, spec.weights()).unwrap();
        assert!(left_layer_fractions(&state, &spec).is_err());
    }

    #[test]
    fn constant_quantile() {
        let w = WeightDistribution::Constant;
        assert_eq!(weight_quantile_m(&w, 10.0, 1024).unwrap(), 1.0);
        assert_eq!(weight_quantile_at(&w, 0.3), 1.0);
    }

    #[test]
    fn two_value_quantile_is_the_upper_point() {
        let w = WeightDistribution::uniform_two_values(1, 2).unwrap();
        assert_eq!(weight_quantile_at(&w, 0.1), 4.0 / 3.0);
        assert_eq!(weight_quantile_at(&w, 0.5), 2.0 / 3.0);
        assert_eq!(weight_quantile_at(&w, 1.0), 2.0 / 3.0);
    }

    #[test]
    fn exponential_quantile_inverts_the_tail() {
        let w = WeightDistribution::Exponential;
        let q = quantile_target(3.0, 4096).unwrap();
        let m = weight_quantile_m(&w, 3.0, 4096).unwrap();
        assert!((m + q.ln()).abs() < 1e-12);
        assert!(((-m).exp() - q).abs() < 1e-12 * q);
    }

    #[test]
    fn quantile_target_validation() {
        assert!(quantile_target(0.0, 1024).is_err());
        assert!(quantile_target(1.0, 15).is_err());
    }
}
