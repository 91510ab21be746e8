//! Seed handling. All randomness flows from explicit `u64` seeds through ChaCha8.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a base seed with stream coordinates (epoch, document index, ...) so
/// that work items drawn in parallel get independent, order-free generators.
pub fn derive_seed(base: u64, stream: &[u64]) -> u64 {
    let mut h = splitmix(base ^ 0x5851_f42d_4c95_7f2d);
    for &s in stream {
        h = splitmix(h ^ s.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
