//! Counter-based seed derivation.
//!
//! Every random consumer gets its own ChaCha stream keyed by `(seed, stream)`,
//! so adding trees, rows or periods never perturbs the draws of earlier ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// A generator for stream `stream` under `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes a child index into a seed (splitmix64 finalizer).
pub fn derive(seed: u64, child: u64) -> u64 {
    let mut z = seed
        .wrapping_add(child.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
