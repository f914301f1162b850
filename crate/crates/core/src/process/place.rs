use rand::Rng;

use crate::error::{Error, Result};
use crate::process::state::{LoadState, Loads};
use crate::process::weights::{WeightDistribution, WeightDraw};
use crate::process::{rank_sample, ProcessSpec, Rule};

/// Where a ball went and how heavy it was.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Placement {
    pub bin: usize,
    pub weight: f64,
    pub draw: WeightDraw,
}

/// A validated bin-choice rule.
///
/// Random draws per ball: `Dmin` takes `d` uniform `u32` indices, `Rank`
/// one uniform `f64`, `Left` one uniform `u32` per group. The weight draw
/// (if any) follows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Placer {
    Dmin { d: usize },
    Rank { d: f64 },
    Left { d: usize },
}

impl Placer {
    pub fn for_spec(spec: &ProcessSpec, n: usize) -> Result<Self> {
        spec.validate_bins(n)?;
        Ok(match spec.rule() {
            Rule::OneChoice => Placer::Dmin { d: 1 },
            Rule::Greedy { d, force_rank } => {
                if !force_rank && d.fract() == 0.0 && d <= 64.0 {
                    Placer::Dmin { d: d as usize }
                } else {
                    Placer::Rank { d }
                }
            }
            Rule::Left { d } => Placer::Left { d },
        })
    }

    fn prepare(&self, state: &mut LoadState) {
        if let Placer::Rank { .. } = self {
            state.ensure_rank_index();
        }
    }

    /// Chooses the receiving bin without modifying `state`. A `Rank` placer
    /// needs the state's rank index (see [`LoadState::ensure_rank_index`]).
    pub fn choose<R: Rng + ?Sized>(&self, state: &LoadState, rng: &mut R) -> usize {
        match *self {
            Placer::Dmin { d } => choose_dmin(state, d, rng),
            Placer::Left { d } => choose_left(state, d, rng),
            Placer::Rank { d } => {
                let u = rng.random::<f64>();
                let rank = rank_sample(d, state.n(), u).expect("validated parameters");
                state.indexed_select(rank)
            }
        }
    }
}

fn choose_dmin<R: Rng + ?Sized>(state: &LoadState, d: usize, rng: &mut R) -> usize {
    let n = state.n() as u32;
    let mut best = rng.random_range(0..n) as usize;
    match state.raw() {
        Loads::Units { bins, .. } => {
            for _ in 1..d {
                let c = rng.random_range(0..n) as usize;
                if (bins[c], c) < (bins[best], best) {
                    best = c;
                }
            }
        }
        Loads::Real { bins, .. } => {
            for _ in 1..d {
                let c = rng.random_range(0..n) as usize;
                if bins[c] < bins[best] || (bins[c] == bins[best] && c < best) {
                    best = c;
                }
            }
        }
    }
    best
}

fn choose_left<R: Rng + ?Sized>(state: &LoadState, d: usize, rng: &mut R) -> usize {
    let group = (state.n() / d) as u32;
    let mut best = rng.random_range(0..group) as usize;
    match state.raw() {
        Loads::Units { bins, .. } => {
            for k in 1..d {
                let c = k * group as usize + rng.random_range(0..group) as usize;
                if bins[c] < bins[best] {
                    best = c;
                }
            }
        }
        Loads::Real { bins, .. } => {
            for k in 1..d {
                let c = k * group as usize + rng.random_range(0..group) as usize;
                if bins[c] < bins[best] {
                    best = c;
                }
            }
        }
    }
    best
}

fn check_storage(state: &LoadState, weights: &WeightDistribution) -> Result<()> {
    if state.accepts(weights) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "state storage cannot hold {} weights",
            weights.name()
        )))
    }
}

fn place_with<R: Rng + ?Sized>(
    state: &mut LoadState,
    placer: Placer,
    weights: &WeightDistribution,
    rng: &mut R,
) -> Placement {
    let bin = placer.choose(state, rng);
    let draw = weights.draw(rng);
    state.add(bin, draw, weights);
    Placement {
        bin,
        weight: weights.value(draw),
        draw,
    }
}

/// Places one ball by the inverse-CDF rank rule: rank `i` receives with
/// probability `p_i = (i/n)^d - ((i-1)/n)^d`.
pub fn place_ball_rank<R: Rng + ?Sized>(
    state: &mut LoadState,
    spec: &ProcessSpec,
    rng: &mut R,
) -> Result<Placement> {
    let d = match spec.rule() {
        Rule::OneChoice => 1.0,
        Rule::Greedy { d, .. } => d,
        Rule::Left { .. } => {
            return Err(Error::Unsupported(
                "rank placement needs Greedy[d] or one-choice".into(),
            ))
        }
    };
    spec.validate_bins(state.n())?;
    check_storage(state, spec.weights())?;
    let placer = Placer::Rank { d };
    placer.prepare(state);
    Ok(place_with(state, placer, spec.weights(), rng))
}

/// Samples `d` bins uniformly with replacement; the least loaded (lowest
/// index on ties) receives the ball.
pub fn place_ball_dmin<R: Rng + ?Sized>(
    state: &mut LoadState,
    d: usize,
    weights: &WeightDistribution,
    rng: &mut R,
) -> Result<Placement> {
    if d < 1 {
        return Err(Error::invalid("d must be ≥ 1"));
    }
    check_storage(state, weights)?;
    Ok(place_with(state, Placer::Dmin { d }, weights, rng))
}

/// One uniform bin from each of `d` contiguous groups; the least loaded
/// receives, ties to the leftmost group.
pub fn place_ball_left<R: Rng + ?Sized>(
    state: &mut LoadState,
    d: usize,
    weights: &WeightDistribution,
    rng: &mut R,
) -> Result<Placement> {
    if d < 2 {
        return Err(Error::invalid(format!("Left[d] needs d ≥ 2, got {d}")));
    }
    if !state.n().is_multiple_of(d) {
        return Err(Error::invalid(format!(
            "Left[{d}] needs n divisible by d, got n = {}",
            state.n()
        )));
    }
    check_storage(state, weights)?;
    Ok(place_with(state, Placer::Left { d }, weights, rng))
}

/// Places one ball with the sampler the spec selects.
pub fn place_ball<R: Rng + ?Sized>(
    state: &mut LoadState,
    spec: &ProcessSpec,
    rng: &mut R,
) -> Result<Placement> {
    let placer = Placer::for_spec(spec, state.n())?;
    check_storage(state, spec.weights())?;
    placer.prepare(state);
    Ok(place_with(state, placer, spec.weights(), rng))
}

const LOAD_LIMIT: f64 = (1u64 << 62) as f64;

fn check_overflow(state: &LoadState, weights: &WeightDistribution, balls: u64) -> Result<()> {
    let reach = match state.unit_loads() {
        Some((bins, _)) => {
            let total: u128 = bins.iter().map(|&b| b as u128).sum();
            let units = weights.max_units().unwrap_or(1) as u128;
            (total + balls as u128 * units) as f64
        }
        None => state.total_weight() + balls as f64 * weights.max_weight(),
    };
    if reach >= LOAD_LIMIT {
        return Err(Error::LoadOverflow {
            balls,
            max_weight: weights.max_weight(),
        });
    }
    Ok(())
}

/// Throws `balls` balls into `state`.
pub fn throw_balls<R: Rng + ?Sized>(
    state: &mut LoadState,
    spec: &ProcessSpec,
    balls: u64,
    rng: &mut R,
) -> Result<()> {
    let placer = Placer::for_spec(spec, state.n())?;
    check_storage(state, spec.weights())?;
    check_overflow(state, spec.weights(), balls)?;
    placer.prepare(state);
    let weights = spec.weights();
    for _ in 0..balls {
        place_with(state, placer, weights, rng);
    }
    Ok(())
}

/// Like [`throw_balls`], calling `observe` after every placement with the
/// updated state.
pub fn throw_balls_observed<R, F>(
    state: &mut LoadState,
    spec: &ProcessSpec,
    balls: u64,
    rng: &mut R,
    mut observe: F,
) -> Result<()>
where
    R: Rng + ?Sized,
    F: FnMut(&Placement, &LoadState),
{
    let placer = Placer::for_spec(spec, state.n())?;
    check_storage(state, spec.weights())?;
    check_overflow(state, spec.weights(), balls)?;
    placer.prepare(state);
    let weights = spec.weights();
    for _ in 0..balls {
        let placement = place_with(state, placer, weights, rng);
        observe(&placement, state);
    }
    Ok(())
}

/// One step of the chain: `n` balls.
pub fn chain_step<R: Rng + ?Sized>(
    state: &mut LoadState,
    spec: &ProcessSpec,
    rng: &mut R,
) -> Result<()> {
    let n = state.n() as u64;
    throw_balls(state, spec, n, rng)
}

/// `balls` placements into `n` empty bins.
pub fn run<R: Rng + ?Sized>(
    spec: &ProcessSpec,
    n: usize,
    balls: u64,
    rng: &mut R,
) -> Result<LoadState> {
    spec.validate_bins(n)?;
    let mut state = LoadState::empty(n, spec.weights())?;
    throw_balls(&mut state, spec, balls, rng)?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::RngContract;

    fn unit() -> WeightDistribution {
        WeightDistribution::Constant
    }

    #[test]
    fn first_ball_gap() {
        let spec = ProcessSpec::greedy(2.0).unwrap();
        let mut rng = RngContract::new(1).stream(0);
        let mut s = LoadState::empty(4, &unit()).unwrap();
        place_ball_rank(&mut s, &spec, &mut rng).unwrap();
        assert_eq!(s.max_load(), 1.0);
        assert_eq!(s.gap(), 0.75);
        assert_eq!(s.balls_thrown(), 1);
    }

    #[test]
    fn rank_one_goes_to_heaviest() {
        // A rank-1 draw needs u < (1/4)^2; all-zero words yield u = 0.
        let spec = ProcessSpec::greedy(2.0).unwrap();
        let mut s = LoadState::from_unit_loads(vec![2, 1, 1, 0]).unwrap();
        let mut rng = ScriptRng(vec![0], 0);
        let p = place_ball_rank(&mut s, &spec, &mut rng).unwrap();
        assert_eq!(p.bin, 0);
        assert_eq!(s.loads(), vec![3.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn dmin_both_samples_same_bin() {
        // All-zero words map every index draw to bin 0.
        let mut s = LoadState::from_unit_loads(vec![1, 0]).unwrap();
        let mut rng = ScriptRng(vec![0], 0);
        place_ball_dmin(&mut s, 2, &unit(), &mut rng).unwrap();
        assert_eq!(s.loads(), vec![2.0, 0.0]);
    }

    /// Replays a fixed sequence of 32-bit words.
    struct ScriptRng(Vec<u32>, usize);

    impl rand::RngCore for ScriptRng {
        fn next_u32(&mut self) -> u32 {
            let v = self.0[self.1 % self.0.len()];
            self.1 += 1;
            v
        }
        fn next_u64(&mut self) -> u64 {
            self.next_u32() as u64
        }
        fn fill_bytes(&mut self, dst: &mut [u8]) {
            rand::rand_core::impls::fill_bytes_via_next(self, dst)
        }
    }

    // In a range of size 2, word 0 selects offset 0 and word 2^31 offset 1.
    const LOW: u32 = 0;
    const HIGH: u32 = 1 << 31;

    #[test]
    fn left_ties_go_left() {
        let mut s = LoadState::from_unit_loads(vec![0, 0, 0, 0]).unwrap();
        let mut rng = ScriptRng(vec![HIGH, LOW], 0);
        let p = place_ball_left(&mut s, 2, &unit(), &mut rng).unwrap();
        assert_eq!(p.bin, 1);
    }

    #[test]
    fn left_strict_minimum_wins() {
        let mut s = LoadState::from_unit_loads(vec![5, 5, 0, 0]).unwrap();
        let mut rng = ScriptRng(vec![LOW, HIGH], 0);
        let p = place_ball_left(&mut s, 2, &unit(), &mut rng).unwrap();
        assert_eq!(p.bin, 3);
    }

    #[test]
    fn left_rejects_indivisible() {
        let mut s = LoadState::empty(5, &unit()).unwrap();
        let mut rng = RngContract::new(0).stream(0);
        assert!(place_ball_left(&mut s, 2, &unit(), &mut rng).is_err());
        assert!(place_ball_left(&mut s, 1, &unit(), &mut rng).is_err());
    }

    #[test]
    fn chain_step_places_n_balls() {
        let spec = ProcessSpec::greedy(2.0).unwrap();
        let mut rng = RngContract::new(5).stream(0);
        let mut s = LoadState::empty(4, &unit()).unwrap();
        chain_step(&mut s, &spec, &mut rng).unwrap();
        assert_eq!(s.balls_thrown(), 4);
        assert_eq!(s.total_weight(), 4.0);
    }

    #[test]
    fn chain_steps_compose() {
        let spec = ProcessSpec::greedy(2.0).unwrap();
        let c = RngContract::new(8);
        let mut a = LoadState::empty(16, &unit()).unwrap();
        let mut ra = c.stream(2);
        chain_step(&mut a, &spec, &mut ra).unwrap();
        chain_step(&mut a, &spec, &mut ra).unwrap();
        let mut b = LoadState::empty(16, &unit()).unwrap();
        let mut rb = c.stream(2);
        for _ in 0..32 {
            place_ball(&mut b, &spec, &mut rb).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn zero_balls_is_empty() {
        let spec = ProcessSpec::greedy(2.0).unwrap();
        let s = run(&spec, 8, 0, &mut RngContract::new(0).stream(0)).unwrap();
        assert_eq!(s.gap(), 0.0);
        assert_eq!(s.balls_thrown(), 0);
    }

    #[test]
    fn overflow_is_reported() {
        let spec = ProcessSpec::greedy(2.0).unwrap();
        let mut s = LoadState::from_unit_loads(vec![1 << 61, 1 << 61]).unwrap();
        let err = throw_balls(&mut s, &spec, 10, &mut RngContract::new(0).stream(0));
        assert!(matches!(err, Err(Error::LoadOverflow { .. })));
    }

    #[test]
    fn rank_rejects_left() {
        let spec = ProcessSpec::left(2).unwrap();
        let mut s = LoadState::empty(4, &unit()).unwrap();
        assert!(place_ball_rank(&mut s, &spec, &mut RngContract::new(0).stream(0)).is_err());
    }

    #[test]
    fn fractional_d_uses_rank_sampler() {
        let spec = ProcessSpec::greedy(1.5).unwrap();
        assert_eq!(Placer::for_spec(&spec, 8).unwrap(), Placer::Rank { d: 1.5 });
        let spec = ProcessSpec::greedy(2.0).unwrap();
        assert_eq!(Placer::for_spec(&spec, 8).unwrap(), Placer::Dmin { d: 2 });
    }

    #[test]
    fn weighted_storage_mismatch() {
        let spec = ProcessSpec::greedy(2.0)
            .unwrap()
            .with_weights(WeightDistribution::Exponential);
        let mut s = LoadState::empty(4, &unit()).unwrap();
        assert!(place_ball(&mut s, &spec, &mut RngContract::new(0).stream(0)).is_err());
    }
}
