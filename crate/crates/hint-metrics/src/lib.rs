//! Reference-based quality metrics over [0,1] RGB images: PSNR with MAX = 1
//! and single-scale SSIM (11x11 Gaussian window, sigma 1.5, K1 = 0.01,
//! K2 = 0.03), computed per channel and averaged. All accumulation is f64.

use hint_data::image::CHANNELS;
use hint_data::Image;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, MetricsError>;

/// PSNR in dB plus SSIM for one image pair.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MetricReport {
    pub psnr: f64,
    pub ssim: f64,
}

pub fn report(a: &Image, b: &Image) -> Result<MetricReport> {
    Ok(MetricReport { psnr: psnr(a, b)?, ssim: ssim(a, b)? })
}

fn check_dims(a: &Image, b: &Image) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(MetricsError::Dimension(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// Mean squared error over every pixel and channel.
pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    check_dims(a, b)?;
    let n = a.data().len() as f64;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| {
            let d = *x as f64 - *y as f64;
            d * d
        })
        .sum();
    Ok(sum / n)
}

/// `10 * log10(1 / MSE)`; identical inputs give the +inf sentinel.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        f64::INFINITY
    } else {
        10.0 * (1.0 / mse).log10()
    }
}

pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?))
}

pub const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 1e-4; // (K1 * L)^2, K1 = 0.01
const SSIM_C2: f64 = 9e-4; // (K2 * L)^2, K2 = 0.03

/// Normalized 1D Gaussian taps; the 2D window is the separable product, so
/// it sums to 1 by construction.
fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let mut taps = [0.0f64; SSIM_WINDOW];
    let mid = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, t) in taps.iter_mut().enumerate() {
        *t = (-((i as f64 - mid).powi(2)) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *t;
    }
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

/// Horizontal pass of the separable window over one channel plane.
fn blur_rows(src: &[f64], w: usize, h: usize, taps: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let mut out = vec![0.0f64; ow * h];
    for y in 0..h {
        for x in 0..ow {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                acc += t * src[y * w + x + k];
            }
            out[y * ow + x] = acc;
        }
    }
    out
}

/// Vertical pass; completes the valid-window weighted mean.
fn blur_cols(src: &[f64], w: usize, h: usize, taps: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let oh = h - SSIM_WINDOW + 1;
    let mut out = vec![0.0f64; w * oh];
    for y in 0..oh {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                acc += t * src[(y + k) * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

fn window_means(plane: &[f64], w: usize, h: usize, taps: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    blur_cols(&blur_rows(plane, w, h, taps), w - SSIM_WINDOW + 1, h, taps)
}

/// Mean SSIM over all valid (fully interior) windows, averaged across
/// channels. Requires both dimensions >= the window side.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    check_dims(a, b)?;
    let (w, h) = (a.width(), a.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(MetricsError::Input(format!(
            "image {w}x{h} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window"
        )));
    }
    let taps = gaussian_taps();
    let n = w * h;
    let mut total = 0.0f64;
    for c in 0..CHANNELS {
        let mut x = vec![0.0f64; n];
        let mut y = vec![0.0f64; n];
        let mut xx = vec![0.0f64; n];
        let mut yy = vec![0.0f64; n];
        let mut xy = vec![0.0f64; n];
        for i in 0..n {
            let xv = a.data()[i * CHANNELS + c] as f64;
            let yv = b.data()[i * CHANNELS + c] as f64;
            x[i] = xv;
            y[i] = yv;
            xx[i] = xv * xv;
            yy[i] = yv * yv;
            xy[i] = xv * yv;
        }
        let mx = window_means(&x, w, h, &taps);
        let my = window_means(&y, w, h, &taps);
        let mxx = window_means(&xx, w, h, &taps);
        let myy = window_means(&yy, w, h, &taps);
        let mxy = window_means(&xy, w, h, &taps);

        let mut acc = 0.0f64;
        for i in 0..mx.len() {
            let (ux, uy) = (mx[i], my[i]);
            let vx = mxx[i] - ux * ux;
            let vy = myy[i] - uy * uy;
            let cov = mxy[i] - ux * uy;
            let s = ((2.0 * ux * uy + SSIM_C1) * (2.0 * cov + SSIM_C2))
                / ((ux * ux + uy * uy + SSIM_C1) * (vx + vy + SSIM_C2));
            acc += s;
        }
        total += acc / mx.len() as f64;
    }
    Ok(total / CHANNELS as f64)
}
