//! Deterministic patch sampling over clean/degraded pairs.

use hint_core::rng::seeded_rng;
use rand::Rng;

use crate::error::{DataError, Result};
use crate::image::Image;

/// Patches must tile onto the network's coarsest grid (4 levels, stride 2
/// between them).
pub const PATCH_DIVISOR: usize = 8;

/// Draws `count` aligned patch pairs, uniform over source pairs and over
/// valid top-left corners. Draw `i` uses the derived stream
/// `(seed, "patch", i)`, so the sequence is stable under seed and
/// independent of evaluation order.
pub fn sample_patches(
    pairs: &[(Image, Image)],
    patch: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<(Image, Image)>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if pairs.is_empty() {
        return Err(DataError::Config("no image pairs to sample from".into()));
    }
    if patch == 0 || patch % PATCH_DIVISOR != 0 {
        return Err(DataError::Config(format!(
            "patch size {patch} must be a positive multiple of {PATCH_DIVISOR}"
        )));
    }
    for (i, (clean, degraded)) in pairs.iter().enumerate() {
        if clean.width() != degraded.width() || clean.height() != degraded.height() {
            return Err(DataError::Config(format!(
                "pair {i}: clean {}x{} vs degraded {}x{}",
                clean.width(),
                clean.height(),
                degraded.width(),
                degraded.height()
            )));
        }
        if patch > clean.width() || patch > clean.height() {
            return Err(DataError::Config(format!(
                "patch size {patch} exceeds pair {i} ({}x{})",
                clean.width(),
                clean.height()
            )));
        }
    }

    (0..count)
        .map(|i| {
            let mut rng = seeded_rng(seed, "patch", i as u64);
            let (clean, degraded) = &pairs[rng.gen_range(0..pairs.len())];
            let x0 = rng.gen_range(0..=clean.width() - patch);
            let y0 = rng.gen_range(0..=clean.height() - patch);
            Ok((clean.crop(x0, y0, patch, patch)?, degraded.crop(x0, y0, patch, patch)?))
        })
        .collect()
}
