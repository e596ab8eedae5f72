//! Deterministic random streams.
//!
//! Every random stream in the crate is addressed by a path of integers
//! (master seed, cell, replication, replicate index, ...). The path is folded
//! through a SplitMix64 finalizer into a 64-bit seed for a ChaCha8 generator,
//! so the numbers a work item sees never depend on which thread runs it or in
//! what order items are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator type used for all simulation and resampling.
pub type Stream = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash a seed path into a single 64-bit seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

/// Stream for the given seed path.
pub fn stream(master: u64, path: &[u64]) -> Stream {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}

/// FNV-1a over a string; used to turn canonical cell keys into path elements.
pub fn hash_str(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}
