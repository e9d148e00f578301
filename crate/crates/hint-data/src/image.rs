//! RGB image in [0,1] with interleaved (row-major HWC) storage.

use crate::error::{DataError, Result};

pub const CHANNELS: usize = 3;

/// Owned RGB image. Every value is finite and within [0,1]; conversions in
/// and out of 8-bit files quantize with round-to-nearest.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(DataError::Image(format!("zero dimension {width}x{height}")));
        }
        if data.len() != width * height * CHANNELS {
            return Err(DataError::Image(format!(
                "data length {} does not match {width}x{height}x{CHANNELS}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(DataError::Image(format!("value {v} outside [0,1]")));
        }
        Ok(Image { width, height, data })
    }

    pub fn constant(width: usize, height: usize, v: f32) -> Result<Self> {
        Image::new(width, height, vec![v; width * height * CHANNELS])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Interleaved RGB rows, `(y * width + x) * 3 + c` indexing.
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * CHANNELS + c]
    }

    /// Planar copy (all R, then G, then B), the layout tensor consumers use.
    pub fn to_planes(&self) -> Vec<f32> {
        let n = self.width * self.height;
        let mut out = vec![0.0f32; n * CHANNELS];
        for i in 0..n {
            for c in 0..CHANNELS {
                out[c * n + i] = self.data[i * CHANNELS + c];
            }
        }
        out
    }

    /// Inverse of [`to_planes`](Self::to_planes); values are clamped to
    /// [0,1] so model outputs can come back without re-validation.
    pub fn from_planes(width: usize, height: usize, planes: &[f32]) -> Result<Self> {
        let n = width * height;
        if planes.len() != n * CHANNELS {
            return Err(DataError::Image(format!(
                "plane length {} does not match {width}x{height}x{CHANNELS}",
                planes.len()
            )));
        }
        let mut data = vec![0.0f32; n * CHANNELS];
        for i in 0..n {
            for c in 0..CHANNELS {
                let v = planes[c * n + i];
                if !v.is_finite() {
                    return Err(DataError::Image(format!("non-finite value {v}")));
                }
                data[i * CHANNELS + c] = v.clamp(0.0, 1.0);
            }
        }
        Image::new(width, height, data)
    }

    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self> {
        if x0 + width > self.width || y0 + height > self.height {
            return Err(DataError::Config(format!(
                "crop {width}x{height}+{x0}+{y0} exceeds image {}x{}",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(width * height * CHANNELS);
        for y in y0..y0 + height {
            let row = (y * self.width + x0) * CHANNELS;
            data.extend_from_slice(&self.data[row..row + width * CHANNELS]);
        }
        Image::new(width, height, data)
    }
}
