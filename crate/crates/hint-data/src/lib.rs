//! Desk-scale data plumbing for the restoration network: procedural clean
//! images, seeded degradations (noise, low light, rain), aligned patch
//! sampling, and PPM/PNG file I/O. Everything is deterministic under its
//! seed; pixel values live in [0,1].

pub mod error;
pub mod image;
pub mod io;
pub mod sample;
pub mod synth;

pub use error::{DataError, Result};
pub use image::Image;
pub use io::{load_image, save_image};
pub use sample::{sample_patches, PATCH_DIVISOR};
pub use synth::{degrade, synth_clean, synth_set, Degradation, DegradationSpec};
