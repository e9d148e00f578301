//! Image file I/O: binary PPM (P6, 8-bit) parsed by hand, PNG (8-bit RGB)
//! via the `png` crate. Format is chosen by file extension.

use std::fs;
use std::path::Path;

use crate::error::{DataError, Result};
use crate::image::{Image, CHANNELS};

/// Loads a `.ppm` or `.png` file. Parse failures report the byte offset the
/// parser stopped at; files in any other format are rejected, not guessed.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    match extension(path)?.as_str() {
        "ppm" => decode_ppm(&fs::read(path)?),
        "png" => decode_png(&fs::read(path)?),
        ext => Err(DataError::Format(format!("unknown extension .{ext}"))),
    }
}

/// Saves 8-bit quantized pixels; `round(v * 255)` per channel.
pub fn save_image(image: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = match extension(path)?.as_str() {
        "ppm" => encode_ppm(image),
        "png" => encode_png(image)?,
        ext => return Err(DataError::Format(format!("unknown extension .{ext}"))),
    };
    fs::write(path, bytes)?;
    Ok(())
}

fn extension(path: &Path) -> Result<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .ok_or_else(|| DataError::Format(format!("no file extension on {}", path.display())))
}

fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

// ---------------------------------------------------------------------------
// PPM (P6)
// ---------------------------------------------------------------------------

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn take(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        Some(b)
    }

    /// Skips whitespace and `#` comments, which the header grammar allows
    /// between any two tokens.
    fn skip_separators(&mut self) {
        while let Some(b) = self.peek() {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(c) = self.take() {
                    if c == b'\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn parse_uint(&mut self, what: &str) -> Result<usize> {
        let start = self.pos;
        let mut value = 0usize;
        while let Some(b) = self.peek() {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add((b - b'0') as usize))
                .ok_or_else(|| DataError::parse(start, format!("{what} overflows")))?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(DataError::parse(start, format!("expected {what}")));
        }
        Ok(value)
    }
}

fn decode_ppm(bytes: &[u8]) -> Result<Image> {
    let mut cur = Cursor { bytes, pos: 0 };
    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        return Err(DataError::parse(0, "expected P6 magic"));
    }
    cur.pos = 2;
    cur.skip_separators();
    let width = cur.parse_uint("width")?;
    cur.skip_separators();
    let height = cur.parse_uint("height")?;
    cur.skip_separators();
    let maxval_at = cur.pos;
    let maxval = cur.parse_uint("maxval")?;
    if maxval != 255 {
        return Err(DataError::Format(format!("maxval {maxval} at byte {maxval_at}, only 255 (8-bit) supported")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match cur.take() {
        Some(b) if b.is_ascii_whitespace() => {}
        _ => return Err(DataError::parse(cur.pos, "expected single whitespace before raster")),
    }
    if width == 0 || height == 0 {
        return Err(DataError::parse(2, format!("zero dimension {width}x{height}")));
    }
    let need = width * height * CHANNELS;
    let raster = &bytes[cur.pos..];
    if raster.len() < need {
        return Err(DataError::parse(
            bytes.len(),
            format!("raster truncated: {} of {need} bytes", raster.len()),
        ));
    }
    let data: Vec<f32> = raster[..need].iter().map(|&b| b as f32 / 255.0).collect();
    Image::new(width, height, data)
}

fn encode_ppm(image: &Image) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(image.data().iter().map(|&v| quantize(v)));
    out
}

// ---------------------------------------------------------------------------
// PNG
// ---------------------------------------------------------------------------

fn decode_png(bytes: &[u8]) -> Result<Image> {
    let decoder = png::Decoder::new(bytes);
    let mut reader = decoder
        .read_info()
        .map_err(|e| DataError::parse(0, format!("png: {e}")))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
        return Err(DataError::Format(format!(
            "png must be 8-bit RGB, got {:?} {:?}",
            info.color_type, info.bit_depth
        )));
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let mut buf = vec![0u8; reader.output_buffer_size()];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| DataError::parse(0, format!("png: {e}")))?;
    let data: Vec<f32> = buf[..frame.buffer_size()].iter().map(|&b| b as f32 / 255.0).collect();
    Image::new(width, height, data)
}

fn encode_png(image: &Image) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, image.width() as u32, image.height() as u32);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| DataError::Format(format!("png encode: {e}")))?;
        let bytes: Vec<u8> = image.data().iter().map(|&v| quantize(v)).collect();
        writer
            .write_image_data(&bytes)
            .map_err(|e| DataError::Format(format!("png encode: {e}")))?;
    }
    Ok(out)
}
