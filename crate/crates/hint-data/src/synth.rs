//! Procedural clean images and seeded degradations.
//!
//! Randomness always flows through `seeded_rng(seed, tag, index)`, so every
//! generator is a pure function of its arguments and parallel callers can
//! split work by index without sharing a stream.

use hint_core::rng::seeded_rng;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{DataError, Result};
use crate::image::{Image, CHANNELS};

/// Degradation family and its parameters. Serialized externally tagged:
/// `{"gaussian_noise": {"sigma": 0.098}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Degradation {
    GaussianNoise { sigma: f64 },
    LowLightGamma { gamma: f64, gain: f64 },
    RainStreaks { count: usize, angle_degrees: f64, intensity: f64 },
}

/// A degradation plus the seed that makes it reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegradationSpec {
    pub kind: Degradation,
    pub seed: u64,
}

impl DegradationSpec {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            Degradation::GaussianNoise { sigma } => {
                if !sigma.is_finite() || sigma < 0.0 {
                    return Err(DataError::Config(format!("sigma {sigma} must be >= 0")));
                }
            }
            Degradation::LowLightGamma { gamma, gain } => {
                if !gamma.is_finite() || gamma <= 1.0 {
                    return Err(DataError::Config(format!("gamma {gamma} must be > 1 for darkening")));
                }
                if !gain.is_finite() || gain <= 0.0 {
                    return Err(DataError::Config(format!("gain {gain} must be > 0")));
                }
            }
            Degradation::RainStreaks { count: _, angle_degrees, intensity } => {
                if !angle_degrees.is_finite() {
                    return Err(DataError::Config(format!("angle {angle_degrees} must be finite")));
                }
                if !intensity.is_finite() || !(0.0..=1.0).contains(&intensity) {
                    return Err(DataError::Config(format!("intensity {intensity} must be in [0,1]")));
                }
            }
        }
        Ok(())
    }
}

fn clip01(v: f64) -> f32 {
    v.clamp(0.0, 1.0) as f32
}

/// Applies `spec` to `clean`; output stays in [0,1] by clipping.
pub fn degrade(clean: &Image, spec: &DegradationSpec) -> Result<Image> {
    spec.validate()?;
    let (w, h) = (clean.width(), clean.height());
    let data = match spec.kind {
        Degradation::GaussianNoise { sigma } => {
            let mut rng = seeded_rng(spec.seed, "degrade-noise", 0);
            let normal = Normal::new(0.0f64, sigma.max(f64::MIN_POSITIVE))
                .map_err(|e| DataError::Config(format!("sigma {sigma}: {e}")))?;
            clean
                .data()
                .iter()
                .map(|&v| {
                    let n = if sigma > 0.0 { normal.sample(&mut rng) } else { 0.0 };
                    clip01(v as f64 + n)
                })
                .collect()
        }
        Degradation::LowLightGamma { gamma, gain } => clean
            .data()
            .iter()
            .map(|&v| clip01(gain * (v as f64).powf(gamma)))
            .collect(),
        Degradation::RainStreaks { count, angle_degrees, intensity } => {
            let mask = rain_mask(w, h, count, angle_degrees, spec.seed);
            clean
                .data()
                .iter()
                .enumerate()
                .map(|(i, &v)| clip01(v as f64 + intensity * mask[i / CHANNELS]))
                .collect()
        }
    };
    Image::new(w, h, data)
}

/// Additive streak mask in [0,1], one value per pixel. Streaks share one
/// global angle (with a small per-streak jitter) and random anchor/length.
fn rain_mask(w: usize, h: usize, count: usize, angle_degrees: f64, seed: u64) -> Vec<f64> {
    let mut mask = vec![0.0f64; w * h];
    let mut rng = seeded_rng(seed, "degrade-rain", 0);
    let max_len = (w.min(h) as f64) * 0.5;
    for _ in 0..count {
        let theta = (angle_degrees + rng.gen_range(-4.0..4.0)).to_radians();
        let (dx, dy) = (theta.cos(), theta.sin());
        let x0 = rng.gen_range(0.0..w as f64);
        let y0 = rng.gen_range(0.0..h as f64);
        let len = rng.gen_range(max_len * 0.3..max_len);
        // Half-pixel steps; each step brightens the nearest pixel.
        let steps = (len * 2.0).ceil() as usize;
        for s in 0..=steps {
            let t = s as f64 * 0.5;
            let x = x0 + t * dx;
            let y = y0 + t * dy;
            if x < 0.0 || y < 0.0 {
                continue;
            }
            let (xi, yi) = (x.round() as usize, y.round() as usize);
            if xi < w && yi < h {
                // Taper toward the streak tail.
                let fall = 1.0 - t / (len + 1.0);
                let m = &mut mask[yi * w + xi];
                *m = m.max(fall);
            }
        }
    }
    mask
}

/// Procedural clean image: oriented gradient, two plaid harmonics, and a few
/// soft discs, normalized into [0.05, 0.95].
pub fn synth_clean(width: usize, height: usize, seed: u64) -> Result<Image> {
    if width == 0 || height == 0 {
        return Err(DataError::Config(format!("zero dimension {width}x{height}")));
    }
    let mut rng = seeded_rng(seed, "synth-clean", 0);
    let tau = std::f64::consts::TAU;

    let grad_theta = rng.gen_range(0.0..tau);
    let (gx, gy) = (grad_theta.cos(), grad_theta.sin());
    let plaids: Vec<(f64, f64, f64, f64)> = (0..2)
        .map(|_| {
            (
                rng.gen_range(1.0..4.0),  // cycles across the image
                rng.gen_range(0.0..tau),  // phase
                rng.gen_range(0.0..tau),  // orientation
                rng.gen_range(0.2..0.6),  // amplitude
            )
        })
        .collect();
    let discs: Vec<(f64, f64, f64, f64, usize)> = (0..3)
        .map(|_| {
            (
                rng.gen_range(0.0..1.0),   // center x, relative
                rng.gen_range(0.0..1.0),   // center y, relative
                rng.gen_range(0.1..0.3),   // radius, relative to min dim
                rng.gen_range(-0.7..0.7),  // amplitude
                rng.gen_range(0..CHANNELS),
            )
        })
        .collect();

    let (wf, hf) = (width as f64, height as f64);
    let mindim = wf.min(hf);
    let mut raw = vec![0.0f64; width * height * CHANNELS];
    for y in 0..height {
        for x in 0..width {
            let (xr, yr) = (x as f64 / wf, y as f64 / hf);
            let mut base = gx * xr + gy * yr;
            for &(freq, phase, theta, amp) in &plaids {
                let u = xr * theta.cos() + yr * theta.sin();
                base += amp * (tau * freq * u + phase).sin();
            }
            for c in 0..CHANNELS {
                let mut v = base + 0.08 * c as f64;
                for &(cx, cy, r, amp, ch) in &discs {
                    if ch == c {
                        let d2 = ((xr - cx) * wf).powi(2) + ((yr - cy) * hf).powi(2);
                        let r2 = (r * mindim).powi(2);
                        v += amp * (-d2 / r2).exp();
                    }
                }
                raw[(y * width + x) * CHANNELS + c] = v;
            }
        }
    }

    let lo = raw.iter().cloned().fold(f64::MAX, f64::min);
    let hi = raw.iter().cloned().fold(f64::MIN, f64::max);
    let data = if hi > lo {
        raw.iter().map(|&v| (0.05 + 0.9 * (v - lo) / (hi - lo)) as f32).collect()
    } else {
        vec![0.5f32; raw.len()]
    };
    Image::new(width, height, data)
}

/// `count` clean images, each from an independent derived stream.
pub fn synth_set(count: usize, width: usize, height: usize, seed: u64) -> Result<Vec<Image>> {
    (0..count)
        .map(|i| {
            let mut rng = seeded_rng(seed, "synth-set", i as u64);
            synth_clean(width, height, rng.gen())
        })
        .collect()
}
