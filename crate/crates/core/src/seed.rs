//! Deterministic seed derivation.
//!
//! Every random quantity in the crate flows from a single master seed through
//! named sub-streams, so that replicates, folds and splits are independent yet
//! exactly reproducible regardless of execution order or thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Derive a child seed from `(master, stream, index)`.
///
/// FNV-1a over the inputs followed by a splitmix64 finalizer; stable across
/// platforms and releases.
pub fn derive_seed(master: u64, stream: &str, index: u64) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf29ce484222325;
    const FNV_PRIME: u64 = 0x100000001b3;
    let mut h = FNV_OFFSET;
    for b in master
        .to_le_bytes()
        .iter()
        .chain(stream.as_bytes())
        .chain(index.to_le_bytes().iter())
    {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(h)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// A ChaCha generator seeded from a named sub-stream of the master seed.
pub fn rng_from(master: u64, stream: &str, index: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(master, stream, index))
}
