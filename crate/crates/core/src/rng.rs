//! Deterministic seed derivation.
//!
//! Every random stream in the crate is a [`ChaCha8Rng`] seeded through
//! [`derive_seed`], which mixes a master seed with a list of integer tags
//! (purpose, iteration, replicate, ...). Deriving independent streams up
//! front, instead of splitting one stream on the fly, keeps results
//! identical no matter how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; good avalanche behaviour for cheap seed mixing.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Mix a master seed with a sequence of tags into a new 64-bit seed.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut s = splitmix64(master ^ 0x6a09_e667_f3bc_c908);
    for &t in tags {
        s = splitmix64(s ^ splitmix64(t));
    }
    s
}

/// A ChaCha stream for the given master seed and tag path.
pub fn rng_from(master: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tags))
}

/// Tag vocabulary for the crate's random streams.
pub mod tag {
    /// Observed-data generation.
    pub const DATA: u64 = 1;
    /// A Markov chain's own randomness (proposals, slice, accept draws).
    pub const CHAIN: u64 = 2;
    /// Model simulations inside a chain; combined with (iteration, index).
    pub const SIM: u64 = 3;
    /// Reference draws from the adjustment prior for diagnostics.
    pub const PRIOR_REF: u64 = 4;
    /// Posterior predictive simulation.
    pub const PREDICTIVE: u64 = 5;
    /// Importance sampling: parameter draws.
    pub const IS_THETA: u64 = 6;
    /// Importance sampling: model simulations per draw.
    pub const IS_SIM: u64 = 7;
    /// Pilot runs used for proposal tuning.
    pub const PILOT: u64 = 8;
    /// Sub-streams inside a single model simulation (one per toad).
    pub const UNIT: u64 = 9;
}
