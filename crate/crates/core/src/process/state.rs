use crate::error::{Error, Result};
use crate::process::rank_index::{LevelIndex, RankIndex, SortedIndex};
use crate::process::weights::{WeightDistribution, WeightDraw};
use crate::stats::CompensatedSum;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Loads {
    /// Loads counted in integer units of `unit` weight.
    Units {
        bins: Vec<u64>,
        total: u64,
        unit: f64,
    },
    Real {
        bins: Vec<f64>,
        total: CompensatedSum,
    },
}

/// Raw per-bin loads plus the total thrown weight.
///
/// The normalised vector (load minus average, sorted nonincreasing) is
/// derived on demand. An optional rank index is maintained alongside the
/// loads once a rank-based placement has asked for it.
#[derive(Clone, Debug)]
pub struct LoadState {
    loads: Loads,
    balls_thrown: u64,
    index: Option<RankIndex>,
}

impl PartialEq for LoadState {
    fn eq(&self, other: &Self) -> bool {
        self.loads == other.loads && self.balls_thrown == other.balls_thrown
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n must be ≥ 1"));
    }
    if n > u32::MAX as usize {
        return Err(Error::invalid("n must fit in 32 bits"));
    }
    Ok(())
}

impl LoadState {
    /// Empty state with storage suited to `weights`: exact integer units
    /// where the distribution allows it.
    pub fn empty(n: usize, weights: &WeightDistribution) -> Result<Self> {
        check_n(n)?;
        let loads = match weights.unit() {
            Some(unit) => Loads::Units {
                bins: vec![0; n],
                total: 0,
                unit,
            },
            None => Loads::Real {
                bins: vec![0.0; n],
                total: CompensatedSum::new(),
            },
        };
        Ok(Self {
            loads,
            balls_thrown: 0,
            index: None,
        })
    }

    /// State holding the given unit-weight loads; `balls_thrown` is their sum.
    pub fn from_unit_loads(loads: Vec<u64>) -> Result<Self> {
        check_n(loads.len())?;
        let total: u64 = loads.iter().sum();
        Ok(Self {
            loads: Loads::Units {
                bins: loads,
                total,
                unit: 1.0,
            },
            balls_thrown: total,
            index: None,
        })
    }

    /// State holding arbitrary nonnegative real loads.
    pub fn from_real_loads(loads: Vec<f64>) -> Result<Self> {
        check_n(loads.len())?;
        if loads.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::invalid("loads must be finite and nonnegative"));
        }
        let total = loads.iter().copied().collect();
        Ok(Self {
            loads: Loads::Real { bins: loads, total },
            balls_thrown: 0,
            index: None,
        })
    }

    pub fn with_balls_thrown(mut self, balls: u64) -> Self {
        self.balls_thrown = balls;
        self
    }

    pub fn n(&self) -> usize {
        match &self.loads {
            Loads::Units { bins, .. } => bins.len(),
            Loads::Real { bins, .. } => bins.len(),
        }
    }

    pub fn balls_thrown(&self) -> u64 {
        self.balls_thrown
    }

    pub fn is_integral(&self) -> bool {
        matches!(self.loads, Loads::Units { .. })
    }

    /// Loads in integer units and the unit weight, for integral storage.
    pub fn unit_loads(&self) -> Option<(&[u64], f64)> {
        match &self.loads {
            Loads::Units { bins, unit, .. } => Some((bins, *unit)),
            Loads::Real { .. } => None,
        }
    }

    pub(crate) fn raw(&self) -> &Loads {
        &self.loads
    }

    pub fn load(&self, bin: usize) -> f64 {
        match &self.loads {
            Loads::Units { bins, unit, .. } => bins[bin] as f64 * unit,
            Loads::Real { bins, .. } => bins[bin],
        }
    }

    pub fn loads(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.load(i)).collect()
    }

    pub fn total_weight(&self) -> f64 {
        match &self.loads {
            Loads::Units { total, unit, .. } => *total as f64 * unit,
            Loads::Real { total, .. } => total.value(),
        }
    }

    pub fn average(&self) -> f64 {
        self.total_weight() / self.n() as f64
    }

    pub fn max_load(&self) -> f64 {
        match &self.loads {
            Loads::Units { bins, unit, .. } => *bins.iter().max().expect("n ≥ 1") as f64 * unit,
            Loads::Real { bins, .. } => bins.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// `load(bin) - average`, computed exactly in units when possible.
    pub fn normalized(&self, bin: usize) -> f64 {
        match &self.loads {
            Loads::Units { bins, total, unit } => {
                let n = bins.len() as i128;
                let scaled = bins[bin] as i128 * n - *total as i128;
                scaled as f64 / n as f64 * unit
            }
            Loads::Real { bins, total } => bins[bin] - total.value() / bins.len() as f64,
        }
    }

    /// Maximum load minus average load.
    pub fn gap(&self) -> f64 {
        match &self.loads {
            Loads::Units { bins, total, unit } => {
                let n = bins.len() as i128;
                let max = *bins.iter().max().expect("n ≥ 1") as i128;
                (max * n - *total as i128) as f64 / n as f64 * unit
            }
            Loads::Real { .. } => self.max_load() - self.average(),
        }
    }

    /// Loads minus the average, sorted nonincreasing.
    pub fn normalized_sorted(&self) -> Vec<f64> {
        let mut x: Vec<f64> = (0..self.n()).map(|i| self.normalized(i)).collect();
        x.sort_by(|a, b| b.total_cmp(a));
        x
    }

    /// Whether `weights` can be added to this state's storage.
    pub fn accepts(&self, weights: &WeightDistribution) -> bool {
        match &self.loads {
            Loads::Units { unit, .. } => weights.unit() == Some(*unit),
            Loads::Real { .. } => true,
        }
    }

    pub(crate) fn add(&mut self, bin: usize, draw: WeightDraw, weights: &WeightDistribution) {
        match &mut self.loads {
            Loads::Units { bins, total, .. } => {
                let WeightDraw::Units(k) = draw else {
                    panic!("real weight added to integral storage");
                };
                let old = bins[bin];
                bins[bin] += k;
                *total += k;
                if let Some(RankIndex::Levels(idx)) = &mut self.index {
                    idx.on_increase(bin, old, bins);
                }
            }
            Loads::Real { bins, total } => {
                let w = weights.value(draw);
                let old = bins[bin];
                bins[bin] += w;
                total.add(w);
                if let Some(RankIndex::Sorted(idx)) = &mut self.index {
                    idx.on_increase(bin, old, bins[bin]);
                }
            }
        }
        self.balls_thrown += 1;
    }

    /// Builds the rank index if it is not maintained yet.
    pub fn ensure_rank_index(&mut self) {
        if self.index.is_some() {
            return;
        }
        self.index = Some(match &self.loads {
            Loads::Units { bins, .. } => RankIndex::Levels(LevelIndex::build(bins)),
            Loads::Real { bins, .. } => RankIndex::Sorted(SortedIndex::build(bins)),
        });
    }

    /// Bin at rank `rank` (1 = heaviest) under the key order
    /// `(load, bin index)`, heaviest key first.
    pub fn bin_at_rank(&self, rank: usize) -> Result<usize> {
        let n = self.n();
        if rank < 1 || rank > n {
            return Err(Error::invalid(format!("rank {rank} outside 1..={n}")));
        }
        Ok(match &self.index {
            Some(idx) => idx.select_heaviest(rank, n),
            None => {
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| self.cmp_bins(a, b));
                order[n - rank]
            }
        })
    }

    pub(crate) fn cmp_bins(&self, a: usize, b: usize) -> std::cmp::Ordering {
        match &self.loads {
            Loads::Units { bins, .. } => bins[a].cmp(&bins[b]).then(a.cmp(&b)),
            Loads::Real { bins, .. } => bins[a].total_cmp(&bins[b]).then(a.cmp(&b)),
        }
    }

    pub(crate) fn indexed_select(&self, rank: usize) -> usize {
        self.index
            .as_ref()
            .expect("rank index built")
            .select_heaviest(rank, self.n())
    }
}
