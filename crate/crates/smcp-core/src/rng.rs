//! Deterministic random stream derivation.
//!
//! Trials, samples and algorithm runs all draw from [`ChaCha8Rng`] streams
//! derived from a master seed by counter mixing, so results are a pure
//! function of (instance, config, seed) regardless of evaluation order.

pub use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

/// splitmix64 finalizer; decorrelates consecutive counters.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream for a (seed, stream-tag, counter) triple.
///
/// Tags separate independent uses of the same master seed (e.g. the
/// realization stream vs. the algorithm's own coin flips within a trial).
pub fn derive(seed: u64, tag: u64, counter: u64) -> ChaCha8Rng {
    let s = mix(seed ^ mix(tag).wrapping_add(counter.wrapping_mul(0x9e37_79b9_7f4a_7c15)));
    ChaCha8Rng::seed_from_u64(s)
}

/// Stream seeded directly from a master seed.
pub fn master(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
