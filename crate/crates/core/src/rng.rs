//! Named random streams derived from a single run seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream names used across the crate.
pub mod streams {
    pub const HIERARCHY: &str = "hierarchy";
    pub const TZ_SAMPLING: &str = "tz-sampling";
    pub const GENERATOR: &str = "generator";
    pub const PAIRS: &str = "pairs";
    pub const SOURCES: &str = "sources";
}

fn fnv1a(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// An RNG for `(seed, name)`; independent of which other streams are used.
pub fn stream(seed: u64, name: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(name));
    rng
}
