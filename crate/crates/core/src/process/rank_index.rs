//! Rank-to-bin lookup for the inverse-CDF sampler.
//!
//! Bins are ordered by the key `(load, bin index)`; rank 1 is the largest
//! key. With this order the `d`-sample minimum (ties to the lower index)
//! picks rank `i` or better with probability exactly `(i/n)^d`.

/// Fenwick tree over nonnegative counts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Fenwick {
    tree: Vec<i64>,
}

impl Fenwick {
    pub fn new(len: usize) -> Self {
        Self {
            tree: vec![0; len + 1],
        }
    }

    pub fn from_counts(counts: &[i64]) -> Self {
        let mut tree = vec![0; counts.len() + 1];
        tree[1..].copy_from_slice(counts);
        for i in 1..tree.len() {
            let parent = i + (i & i.wrapping_neg());
            if parent < tree.len() {
                tree[parent] += tree[i];
            }
        }
        Self { tree }
    }

    pub fn len(&self) -> usize {
        self.tree.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn add(&mut self, index: usize, delta: i64) {
        let mut i = index + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum of `[0, end)`.
    pub fn prefix(&self, end: usize) -> i64 {
        let mut i = end;
        let mut acc = 0;
        while i > 0 {
            acc += self.tree[i];
            i &= i - 1;
        }
        acc
    }

    /// Smallest index `i` with `prefix(i + 1) > target`, or `len()` if the
    /// total does not exceed `target`. Counts must be nonnegative.
    pub fn lower_bound(&self, target: i64) -> usize {
        let mut pos = 0;
        let mut remaining = target;
        let mut step = if self.is_empty() {
            0
        } else {
            1 << (usize::BITS - 1 - self.len().leading_zeros())
        };
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] <= remaining {
                pos = next;
                remaining -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}

/// Integral loads: a Fenwick tree over load levels (relative to `base`) and,
/// per level, the member bins in ascending index order.
#[derive(Clone, Debug)]
pub(crate) struct LevelIndex {
    base: u64,
    counts: Fenwick,
    members: Vec<Vec<u32>>,
}

impl LevelIndex {
    pub(crate) fn build(loads: &[u64]) -> Self {
        let min = loads.iter().copied().min().unwrap_or(0);
        let max = loads.iter().copied().max().unwrap_or(0);
        let span = (max - min + 1) as usize;
        let capacity = (2 * span).next_power_of_two().max(16);
        let mut members = vec![Vec::new(); capacity];
        for (bin, &load) in loads.iter().enumerate() {
            members[(load - min) as usize].push(bin as u32);
        }
        let counts: Vec<i64> = members.iter().map(|m| m.len() as i64).collect();
        Self {
            base: min,
            counts: Fenwick::from_counts(&counts),
            members,
        }
    }

    /// `loads` must already hold the new value for `bin`.
    pub(crate) fn on_increase(&mut self, bin: usize, old: u64, loads: &[u64]) {
        let new = loads[bin];
        if (new - self.base) as usize >= self.members.len() {
            *self = Self::build(loads);
            return;
        }
        let from = (old - self.base) as usize;
        let to = (new - self.base) as usize;
        let b = bin as u32;
        let level = &mut self.members[from];
        let pos = level.binary_search(&b).expect("bin present at its level");
        level.remove(pos);
        let level = &mut self.members[to];
        let pos = level.binary_search(&b).unwrap_err();
        level.insert(pos, b);
        self.counts.add(from, -1);
        self.counts.add(to, 1);
    }

    /// Bin at 0-based position `pos` of the ascending `(load, index)` order.
    pub(crate) fn select_ascending(&self, pos: usize) -> usize {
        let level = self.counts.lower_bound(pos as i64);
        let offset = pos - self.counts.prefix(level) as usize;
        self.members[level][offset] as usize
    }
}

/// Real loads: all `(load, index)` keys kept sorted.
#[derive(Clone, Debug)]
pub(crate) struct SortedIndex {
    keys: Vec<(f64, u32)>,
}

fn key_cmp(a: &(f64, u32), b: &(f64, u32)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

impl SortedIndex {
    pub(crate) fn build(loads: &[f64]) -> Self {
        let mut keys: Vec<(f64, u32)> = loads
            .iter()
            .enumerate()
            .map(|(i, &l)| (l, i as u32))
            .collect();
        keys.sort_by(key_cmp);
        Self { keys }
    }

    pub(crate) fn on_increase(&mut self, bin: usize, old: f64, new: f64) {
        let old_key = (old, bin as u32);
        let from = self
            .keys
            .binary_search_by(|k| key_cmp(k, &old_key))
            .expect("key present");
        let new_key = (new, bin as u32);
        // Loads only grow, so the key moves right.
        let tail = &self.keys[from + 1..];
        let shift = tail.partition_point(|k| key_cmp(k, &new_key).is_lt());
        self.keys[from..=from + shift].rotate_left(1);
        self.keys[from + shift] = new_key;
    }

    pub(crate) fn select_ascending(&self, pos: usize) -> usize {
        self.keys[pos].1 as usize
    }
}

#[derive(Clone, Debug)]
pub(crate) enum RankIndex {
    Levels(LevelIndex),
    Sorted(SortedIndex),
}

impl RankIndex {
    /// Bin holding rank `rank` (1 = heaviest) among `n` bins.
    pub(crate) fn select_heaviest(&self, rank: usize, n: usize) -> usize {
        let pos = n - rank;
        match self {
            RankIndex::Levels(l) => l.select_ascending(pos),
            RankIndex::Sorted(s) => s.select_ascending(pos),
        }
    }
}
