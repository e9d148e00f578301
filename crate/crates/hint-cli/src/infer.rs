//! Whole-image restoration: pad to the model's spatial granularity, run the
//! network, crop back to the original frame.

use std::path::Path;

use hint_core::scalar::Scalar;
use hint_data::image::{Image, CHANNELS};
use hint_data::io::{load_image, save_image};
use hint_model::checkpoint::load_model;
use hint_model::model::Model;

use crate::error::Result;
use crate::pairs::{to_image, to_tensor};

/// Mirror-pads `img` on the right and bottom to `tw` x `th`. The border
/// pixel is not repeated (x maps to 2w-2-x), so gradients stay continuous
/// across the seam.
fn reflect_pad(img: &Image, tw: usize, th: usize) -> Result<Image> {
    let (w, h) = (img.width(), img.height());
    let mut data = Vec::with_capacity(tw * th * CHANNELS);
    for y in 0..th {
        let sy = if y < h { y } else { (2 * h).saturating_sub(2 + y).min(h - 1) };
        for x in 0..tw {
            let sx = if x < w { x } else { (2 * w).saturating_sub(2 + x).min(w - 1) };
            for c in 0..CHANNELS {
                data.push(img.pixel(sx, sy, c));
            }
        }
    }
    Ok(Image::new(tw, th, data)?)
}

fn round_up(v: usize, to: usize) -> usize {
    v.div_ceil(to) * to
}

/// Runs the model on an image of any size. Output has the input's exact
/// dimensions; values are clamped to `[0, 1]`.
pub fn restore<T: Scalar>(model: &Model<T>, input: &Image) -> Result<Image> {
    let div = model.config().spatial_divisor();
    let (w, h) = (input.width(), input.height());
    let (tw, th) = (round_up(w, div), round_up(h, div));
    let padded = if (tw, th) == (w, h) { input.clone() } else { reflect_pad(input, tw, th)? };
    let out = model.forward(&to_tensor::<T>(&padded))?;
    let full = to_image(&out)?;
    if (tw, th) == (w, h) {
        Ok(full)
    } else {
        Ok(full.crop(0, 0, w, h)?)
    }
}

/// File-to-file restoration used by the CLI.
pub fn infer_file(ckpt: &Path, input: &Path, output: &Path) -> Result<(usize, usize)> {
    let model = load_model::<f32>(ckpt)?;
    let img = load_image(input)?;
    let restored = restore(&model, &img)?;
    save_image(&restored, output)?;
    Ok((restored.width(), restored.height()))
}
