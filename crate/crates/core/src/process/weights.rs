//! Ball weight distributions, normalised to mean one.

use rand::Rng;

use crate::error::{Error, Result};

/// A single weight draw.
///
/// Distributions with an integral support (up to a common scale) report
/// their draws in integer units so loads can be accumulated exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightDraw {
    Units(u64),
    Real(f64),
}

/// Finite discrete weights, stored normalised to mean one.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalWeights {
    values: Vec<f64>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl EmpiricalWeights {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub enum WeightDistribution {
    /// Every ball has weight one.
    #[default]
    Constant,
    /// Uniform over two integer sizes `{low, high}`, rescaled to mean one.
    UniformTwoValues { low: u32, high: u32 },
    /// Exponential with mean one.
    Exponential,
    /// Finite support with arbitrary probabilities, rescaled to mean one.
    BoundedEmpirical(EmpiricalWeights),
}

impl WeightDistribution {
    pub fn uniform_two_values(low: u32, high: u32) -> Result<Self> {
        if low == 0 || high <= low {
            return Err(Error::invalid(format!(
                "uniform two-value weights need 0 < low < high, got {{{low}, {high}}}"
            )));
        }
        Ok(WeightDistribution::UniformTwoValues { low, high })
    }

    /// Discrete weights `values[k]` with probability `probs[k]`. The values
    /// are divided by their mean so the resulting distribution has mean one.
    pub fn bounded_empirical(values: Vec<f64>, probs: Option<Vec<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("empirical weights need at least one value"));
        }
        if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::invalid(
                "empirical weights must be finite and positive",
            ));
        }
        let probs = match probs {
            Some(p) => {
                if p.len() != values.len() {
                    return Err(Error::invalid(
                        "empirical weights: probs and values differ in length",
                    ));
                }
                if p.iter().any(|q| !q.is_finite() || *q < 0.0) {
                    return Err(Error::invalid(
                        "empirical weights: probabilities must be nonnegative",
                    ));
                }
                let total: f64 = p.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::invalid(format!(
                        "empirical weights: probabilities sum to {total}, not 1"
                    )));
                }
                p.iter().map(|q| q / total).collect()
            }
            None => vec![1.0 / values.len() as f64; values.len()],
        };
        let mean: f64 = values.iter().zip(&probs).map(|(v, p)| v * p).sum();
        let mut pairs: Vec<(f64, f64)> = values.iter().map(|v| v / mean).zip(probs).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (values, probs): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        *cumulative.last_mut().expect("nonempty") = 1.0;
        Ok(WeightDistribution::BoundedEmpirical(EmpiricalWeights {
            values,
            probs,
            cumulative,
        }))
    }

    pub fn name(&self) -> &'static str {
        match self {
            WeightDistribution::Constant => "constant",
            WeightDistribution::UniformTwoValues { .. } => "uniform-two",
            WeightDistribution::Exponential => "exponential",
            WeightDistribution::BoundedEmpirical(_) => "empirical",
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, WeightDistribution::Constant)
    }

    /// Scale of one integer unit, for distributions drawn in units.
    pub fn unit(&self) -> Option<f64> {
        match self {
            WeightDistribution::Constant => Some(1.0),
            WeightDistribution::UniformTwoValues { low, high } => {
                Some(2.0 / (*low as f64 + *high as f64))
            }
            _ => None,
        }
    }

    /// Largest weight in integer units, when drawn in units.
    pub fn max_units(&self) -> Option<u64> {
        match self {
            WeightDistribution::Constant => Some(1),
            WeightDistribution::UniformTwoValues { high, .. } => Some(*high as u64),
            _ => None,
        }
    }

    /// Weight for a uniform `u` in `[0, 1)` by inverse transform.
    pub fn quantile_draw(&self, u: f64) -> WeightDraw {
        match self {
            WeightDistribution::Constant => WeightDraw::Units(1),
            WeightDistribution::UniformTwoValues { low, high } => {
                WeightDraw::Units(if u < 0.5 { *low as u64 } else { *high as u64 })
            }
            WeightDistribution::Exponential => WeightDraw::Real(-(-u).ln_1p()),
            WeightDistribution::BoundedEmpirical(e) => {
                let k = e.cumulative.partition_point(|c| *c <= u);
                WeightDraw::Real(e.values[k.min(e.values.len() - 1)])
            }
        }
    }

    /// Draws one weight. Constant weights consume no randomness; every other
    /// distribution consumes exactly one uniform `f64`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> WeightDraw {
        match self {
            WeightDistribution::Constant => WeightDraw::Units(1),
            _ => self.quantile_draw(rng.random::<f64>()),
        }
    }

    pub fn value(&self, draw: WeightDraw) -> f64 {
        match draw {
            WeightDraw::Units(u) => u as f64 * self.unit().unwrap_or(1.0),
            WeightDraw::Real(w) => w,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.value(self.draw(rng))
    }

    /// Mean of the distribution. One by construction.
    pub fn mean(&self) -> f64 {
        1.0
    }

    pub fn min_weight(&self) -> f64 {
        match self {
            WeightDistribution::Constant => 1.0,
            WeightDistribution::UniformTwoValues { low, .. } => *low as f64 * self.unit().unwrap(),
            WeightDistribution::Exponential => 0.0,
            WeightDistribution::BoundedEmpirical(e) => e.values[0],
        }
    }

    /// Largest weight the inverse-transform sampler can return.
    pub fn max_weight(&self) -> f64 {
        match self {
            WeightDistribution::Constant => 1.0,
            WeightDistribution::UniformTwoValues { high, .. } => {
                *high as f64 * self.unit().unwrap()
            }
            // u is at most 1 - 2^-53.
            WeightDistribution::Exponential => 53.0 * std::f64::consts::LN_2,
            WeightDistribution::BoundedEmpirical(e) => *e.values.last().unwrap(),
        }
    }

    /// `M(z) - 1` where `M(z) = E[exp(z W)]`, evaluated without cancellation
    /// near zero.
    pub fn mgf_minus_one(&self, z: f64) -> Result<f64> {
        match self {
            WeightDistribution::Constant => Ok(z.exp_m1()),
            WeightDistribution::UniformTwoValues { low, high } => {
                let u = self.unit().unwrap();
                let (a, b) = (*low as f64 * u, *high as f64 * u);
                Ok(0.5 * ((a * z).exp_m1() + (b * z).exp_m1()))
            }
            WeightDistribution::Exponential => {
                if z >= 1.0 {
                    Err(Error::MgfDomain {
                        z,
                        reason: "exponential(1) mgf diverges for z >= 1".into(),
                    })
                } else {
                    Ok(z / (1.0 - z))
                }
            }
            WeightDistribution::BoundedEmpirical(e) => Ok(e
                .values
                .iter()
                .zip(&e.probs)
                .map(|(v, p)| p * (v * z).exp_m1())
                .sum()),
        }
    }

    pub fn mgf(&self, z: f64) -> Result<f64> {
        if z == 0.0 {
            return Ok(1.0);
        }
        self.mgf_minus_one(z).map(|m| m + 1.0)
    }

    /// `M''(z) = E[W^2 exp(z W)]`.
    pub fn mgf_second_derivative(&self, z: f64) -> Result<f64> {
        match self {
            WeightDistribution::Constant => Ok(z.exp()),
            WeightDistribution::UniformTwoValues { low, high } => {
                let u = self.unit().unwrap();
                let (a, b) = (*low as f64 * u, *high as f64 * u);
                Ok(0.5 * (a * a * (a * z).exp() + b * b * (b * z).exp()))
            }
            WeightDistribution::Exponential => {
                if z >= 1.0 {
                    Err(Error::MgfDomain {
                        z,
                        reason: "exponential(1) mgf diverges for z >= 1".into(),
                    })
                } else {
                    Ok(2.0 / (1.0 - z).powi(3))
                }
            }
            WeightDistribution::BoundedEmpirical(e) => Ok(e
                .values
                .iter()
                .zip(&e.probs)
                .map(|(v, p)| p * v * v * (v * z).exp())
                .sum()),
        }
    }

    /// A `λ > 0` with `E[exp(λ W)] < ∞`.
    pub fn lambda(&self) -> f64 {
        match self {
            WeightDistribution::Exponential => 0.5,
            _ => 1.0,
        }
    }

    /// `S ≥ 1` with `M''(z) < 2S` for `|z| < λ/2`.
    ///
    /// Weights are nonnegative, so `M''` is nondecreasing and its supremum on
    /// the open interval is `M''(λ/2)`.
    pub fn s_bound(&self) -> f64 {
        let peak = self
            .mgf_second_derivative(self.lambda() / 2.0)
            .expect("λ/2 lies inside the mgf domain");
        (peak / 2.0).max(1.0)
    }

    /// `Pr[W > m]`.
    pub fn strict_upper_tail(&self, m: f64) -> f64 {
        match self {
            WeightDistribution::Exponential => {
                if m < 0.0 {
                    1.0
                } else {
                    (-m).exp()
                }
            }
            _ => {
                let (values, probs) = self.support();
                values
                    .iter()
                    .zip(&probs)
                    .filter(|(v, _)| **v > m)
                    .map(|(_, p)| p)
                    .sum()
            }
        }
    }

    /// Support points and probabilities of a discrete distribution, sorted
    /// ascending. Empty for the exponential distribution.
    pub fn support(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            WeightDistribution::Constant => (vec![1.0], vec![1.0]),
            WeightDistribution::UniformTwoValues { low, high } => {
                let u = self.unit().unwrap();
                (vec![*low as f64 * u, *high as f64 * u], vec![0.5, 0.5])
            }
            WeightDistribution::Exponential => (Vec::new(), Vec::new()),
            WeightDistribution::BoundedEmpirical(e) => (e.values.clone(), e.probs.clone()),
        }
    }
}
