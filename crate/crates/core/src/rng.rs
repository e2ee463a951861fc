//! Seeded random number streams.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// The generator used everywhere in the crate.
pub type QRng = ChaCha20Rng;

/// Returns the generator for `seed` on an independent `stream`.
pub fn stream(seed: u64, stream: u64) -> QRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a per-trial seed from a base seed and a trial index.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    let mut z = seed ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
