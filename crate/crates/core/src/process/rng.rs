use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator every trial draws from.
pub type TrialRng = ChaCha8Rng;

/// Per-trial stream derivation.
///
/// Trial `k` of base seed `s` uses ChaCha8 keyed by `seed_from_u64(s)` on
/// stream number `k`. ChaCha is counter based, so the stream is a pure
/// function of `(s, k)`: adding trials never perturbs the draws of existing
/// ones, and scheduling order is irrelevant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngContract {
    base_seed: u64,
}

impl RngContract {
    pub fn new(base_seed: u64) -> Self {
        Self { base_seed }
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    pub fn stream(&self, trial: u64) -> TrialRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.base_seed);
        rng.set_stream(trial);
        rng
    }
}
