//! Deterministic random number generation.
//!
//! All stochastic operations in this crate draw from a [`ChaCha8Rng`] seeded
//! explicitly, so a (inputs, seed) pair always reproduces the same bytes on
//! every platform. Batch drivers derive one child seed per item with
//! [`derive_seed`] so that adding or reordering workers never changes what a
//! given item sees.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Build the stream cipher RNG used by every seeded operation.
#[must_use]
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive a per-item seed from a global seed and the item's index.
///
/// Uses the splitmix64 finalizer, which is a bijection on `u64`, so distinct
/// `(seed, index)` pairs map to well-separated child seeds. The mixing is
/// fixed by this crate and does not depend on `std` hasher internals.
#[must_use]
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(index)
        .wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
