//! Deterministic random-stream derivation.
//!
//! Every stochastic operation takes an explicit stream. Experiments derive one
//! stream per trial from a master seed and the trial index, so results are
//! bit-reproducible regardless of how trials are scheduled across workers.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; decorrelates consecutive indices.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A random stream for a single independent work unit.
///
/// `domain` separates different uses of the same master seed (trials,
/// eigenvalue realizations, ...); `index` is the work-unit index.
pub fn stream(master_seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let s = mix(master_seed ^ mix(domain.wrapping_mul(0x517c_c1b7_2722_0a95) ^ index));
    ChaCha8Rng::seed_from_u64(s)
}

/// A stream not tied to a work-unit index.
pub fn root_stream(master_seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(master_seed))
}

/// Derive an independent sub-seed (e.g. one per sweep point).
pub fn derive(master_seed: u64, salt: u64) -> u64 {
    mix(master_seed ^ mix(salt))
}
