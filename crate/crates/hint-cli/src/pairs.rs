//! Bridges images to model tensors and assembles (clean, degraded) training
//! pairs from the synthetic generator.

use hint_core::rng::seeded_rng;
use hint_core::scalar::Scalar;
use hint_core::tensor::Tensor;
use hint_data::image::{Image, CHANNELS};
use hint_data::synth::{degrade, synth_set, DegradationSpec};
use rand::Rng;

use crate::config::DataCfg;
use crate::error::{CliError, Result};

/// Image as a `[3, H, W]` tensor, values in `[0, 1]`.
pub fn to_tensor<T: Scalar>(img: &Image) -> Tensor<T> {
    let planes: Vec<T> = img.to_planes().iter().map(|v| T::from_f64(*v as f64)).collect();
    Tensor::from_vec(vec![CHANNELS, img.height(), img.width()], planes)
        .expect("plane buffer matches its own dimensions")
}

/// Tensor back to an image. Values are clamped to `[0, 1]`; non-finite
/// entries are a numeric error (the model diverged, not a data problem).
pub fn to_image<T: Scalar>(t: &Tensor<T>) -> Result<Image> {
    let shape = t.shape();
    if shape.len() != 3 || shape[0] != CHANNELS {
        return Err(CliError::Numeric(format!(
            "expected a [3, H, W] output tensor, got {shape:?}"
        )));
    }
    let planes: Vec<f32> = t.data().iter().map(|v| v.to_f64() as f32).collect();
    if planes.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Numeric("model output contains non-finite values".into()));
    }
    Image::from_planes(shape[2], shape[1], &planes).map_err(CliError::from)
}

/// Degrades `clean` with a per-image seed split off the degradation seed,
/// so every image in a set gets an independent corruption stream.
pub fn degrade_indexed(clean: &Image, spec: &DegradationSpec, index: u64) -> Result<Image> {
    let seed: u64 = seeded_rng(spec.seed, "degrade-image", index).gen();
    let per_image = DegradationSpec { kind: spec.kind.clone(), seed };
    degrade(clean, &per_image).map_err(CliError::from)
}

/// Synthesizes `n_images` training pairs plus one held-out evaluation pair.
/// Everything derives from `seed`; the same seed always yields the same data.
pub fn build_pairs(cfg: &DataCfg, seed: u64) -> Result<(Vec<(Image, Image)>, (Image, Image))> {
    let cleans = synth_set(cfg.n_images + 1, cfg.image_size, cfg.image_size, seed)?;
    let mut pairs = Vec::with_capacity(cleans.len());
    for (i, clean) in cleans.into_iter().enumerate() {
        let degraded = degrade_indexed(&clean, &cfg.degradation, i as u64)?;
        pairs.push((clean, degraded));
    }
    let eval = pairs.pop().expect("synth_set returned n_images + 1 images");
    Ok((pairs, eval))
}
