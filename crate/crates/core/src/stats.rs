//! Small numeric helpers shared by the potential and analysis modules.

use statrs::distribution::{Beta, ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Neumaier's variant of Kahan summation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let m = mean(values);
    if n < 2 {
        return (m, f64::NAN);
    }
    let ss = compensated_sum(values.iter().map(|v| (v - m) * (v - m)));
    (m, (ss / (n - 1) as f64 / n as f64).sqrt())
}

/// Ordinary least squares fit `y = intercept + slope * x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrendFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub t_stat: f64,
    pub dof: usize,
}

impl TrendFit {
    /// One-sided test of `slope > 0` at the given confidence level.
    pub fn significantly_positive(&self, confidence: f64) -> bool {
        if self.slope_stderr == 0.0 {
            return self.slope > 0.0;
        }
        let t = StudentsT::new(0.0, 1.0, self.dof as f64).expect("dof >= 1");
        self.t_stat > t.inverse_cdf(confidence)
    }
}

pub fn linear_trend(xs: &[f64], ys: &[f64]) -> Result<TrendFit> {
    if xs.len() != ys.len() {
        return Err(Error::invalid("trend fit needs equally long x and y"));
    }
    let k = xs.len();
    if k < 3 {
        return Err(Error::invalid("trend fit needs at least 3 points"));
    }
    let mx = mean(xs);
    let my = mean(ys);
    let sxx = compensated_sum(xs.iter().map(|x| (x - mx) * (x - mx)));
    if sxx == 0.0 {
        return Err(Error::invalid("trend fit needs distinct x values"));
    }
    let sxy = compensated_sum(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss = compensated_sum(
        xs.iter()
            .zip(ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2)),
    );
    let dof = k - 2;
    let slope_stderr = (rss / dof as f64 / sxx).sqrt();
    let t_stat = if slope_stderr > 0.0 {
        slope / slope_stderr
    } else if slope > 0.0 {
        f64::INFINITY
    } else if slope < 0.0 {
        f64::NEG_INFINITY
    } else {
        0.0
    };
    Ok(TrendFit {
        slope,
        intercept,
        slope_stderr,
        t_stat,
        dof,
    })
}

/// Two-sided Clopper-Pearson interval for `hits` successes in `total` trials.
pub fn clopper_pearson(hits: u64, total: u64, confidence: f64) -> (f64, f64) {
    assert!(total > 0 && hits <= total);
    let tail = (1.0 - confidence) / 2.0;
    let (x, n) = (hits as f64, total as f64);
    let lower = if hits == 0 {
        0.0
    } else {
        Beta::new(x, n - x + 1.0)
            .expect("valid beta shape")
            .inverse_cdf(tail)
    };
    let upper = if hits == total {
        1.0
    } else {
        Beta::new(x + 1.0, n - x)
            .expect("valid beta shape")
            .inverse_cdf(1.0 - tail)
    };
    (lower, upper)
}
