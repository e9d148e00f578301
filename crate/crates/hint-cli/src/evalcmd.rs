//! Checkpoint evaluation over a directory of image pairs. Files pair by
//! stem: `name_clean.ppm|png` with `name_degraded.ppm|png`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hint_data::io::load_image;
use hint_model::checkpoint::load_model;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::infer::restore;

#[derive(Debug, Serialize)]
pub struct EvalSummary {
    pub pairs: usize,
    pub psnr: f64,
    pub ssim: f64,
}

const EXTS: [&str; 2] = ["ppm", "png"];

fn role_of(path: &Path) -> Option<(String, bool)> {
    let ext = path.extension()?.to_str()?.to_ascii_lowercase();
    if !EXTS.contains(&ext.as_str()) {
        return None;
    }
    let stem = path.file_stem()?.to_str()?;
    if let Some(base) = stem.strip_suffix("_clean") {
        Some((base.to_string(), true))
    } else {
        stem.strip_suffix("_degraded").map(|base| (base.to_string(), false))
    }
}

/// Collects `(clean, degraded)` path pairs, sorted by stem so results don't
/// depend on directory iteration order.
fn collect_pairs(dir: &Path) -> Result<Vec<(PathBuf, PathBuf)>> {
    let mut cleans: BTreeMap<String, PathBuf> = BTreeMap::new();
    let mut degradeds: BTreeMap<String, PathBuf> = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))? {
        let path = entry.map_err(|e| CliError::Data(e.to_string()))?.path();
        match role_of(&path) {
            Some((base, true)) => {
                cleans.insert(base, path);
            }
            Some((base, false)) => {
                degradeds.insert(base, path);
            }
            None => {}
        }
    }
    let mut pairs = Vec::new();
    for (base, clean) in &cleans {
        let degraded = degradeds.remove(base).ok_or_else(|| {
            CliError::Data(format!("{base}: found a clean image but no degraded partner"))
        })?;
        pairs.push((clean.clone(), degraded));
    }
    if let Some((base, _)) = degradeds.into_iter().next() {
        return Err(CliError::Data(format!(
            "{base}: found a degraded image but no clean partner"
        )));
    }
    if pairs.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no *_clean/*_degraded image pairs",
            dir.display()
        )));
    }
    Ok(pairs)
}

/// Restores every degraded image and averages PSNR/SSIM against the cleans.
pub fn evaluate(ckpt: &Path, dir: &Path) -> Result<EvalSummary> {
    let model = load_model::<f32>(ckpt)?;
    let pairs = collect_pairs(dir)?;
    let mut psnr_sum = 0.0;
    let mut ssim_sum = 0.0;
    for (clean_path, degraded_path) in &pairs {
        let clean = load_image(clean_path)?;
        let degraded = load_image(degraded_path)?;
        let restored = restore(&model, &degraded)?;
        psnr_sum += hint_metrics::psnr(&restored, &clean)?;
        ssim_sum += hint_metrics::ssim(&restored, &clean)?;
    }
    let n = pairs.len() as f64;
    Ok(EvalSummary { pairs: pairs.len(), psnr: psnr_sum / n, ssim: ssim_sum / n })
}
