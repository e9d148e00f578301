//! Deterministic seed derivation.
//!
//! Every consumer of randomness derives an independent ChaCha stream as
//! `sha256(root || tag || index)`, so draws are reproducible, independent of
//! evaluation order, and splittable for parallel use.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// 32-byte seed derived from a root seed, a purpose tag, and an index.
pub fn derive_seed(root: u64, tag: &str, index: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update(tag.as_bytes());
    h.update(index.to_le_bytes());
    h.finalize().into()
}

/// Independent deterministic generator for `(root, tag, index)`.
pub fn seeded_rng(root: u64, tag: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(derive_seed(root, tag, index))
}
