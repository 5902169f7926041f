//! Deterministic per-replicate random streams.
//!
//! A replicate's seed is a pure function of `(master seed, namespace,
//! replicate index)`, so batches produce the same numbers no matter how
//! replicates are scheduled over workers. Each replicate then draws from two
//! ChaCha8 streams keyed by that seed: stream 0 drives the block-counting
//! chain (holding times and merger sizes), stream 1 drives the hypergeometric
//! thinning of external branches.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub const CHAIN_STREAM: u64 = 0;
pub const THINNING_STREAM: u64 = 1;

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `index` inside `namespace` under `master`.
pub fn replicate_seed(master: u64, namespace: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ namespace) ^ index)
}

/// Stream `stream` of the generator keyed by `seed`.
pub fn substream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The (chain, thinning) pair for one replicate seed.
pub fn replicate_streams(seed: u64) -> (SimRng, SimRng) {
    (
        substream(seed, CHAIN_STREAM),
        substream(seed, THINNING_STREAM),
    )
}
