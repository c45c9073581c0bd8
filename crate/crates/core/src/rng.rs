//! Reproducible random streams.
//!
//! Every unit of randomized work (one permutation, one simulated dataset) draws
//! from its own ChaCha8 stream addressed by a 64-bit seed and a stream index, so
//! results do not depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Environment variable consulted by front ends for a default seed.
pub const SEED_ENV: &str = "GRV_SEED";

/// Default seed when neither a flag nor [`SEED_ENV`] provides one.
pub const DEFAULT_SEED: u64 = 20_240_229;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a base seed with a path of integer labels (run, dataset, test id...).
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(seed), |acc, &label| {
        splitmix64(acc ^ splitmix64(label))
    })
}

/// Stable 64-bit hash of a string label (FNV-1a), for deriving per-test seeds.
pub fn label_hash(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// The `index`-th independent stream under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Resolve a seed from an explicit value, then [`SEED_ENV`], then [`DEFAULT_SEED`].
pub fn resolve_seed(explicit: Option<u64>) -> u64 {
    explicit
        .or_else(|| std::env::var(SEED_ENV).ok()?.trim().parse().ok())
        .unwrap_or(DEFAULT_SEED)
}
