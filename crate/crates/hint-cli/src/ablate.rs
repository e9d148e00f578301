//! Directional ablation: does the full cache-utilization path beat plain
//! attention on a fixed synthetic suite? Asserted softly; noisy at desk
//! scale, so the verdict is pass/warn, never a hard failure.

use hint_core::rng::seeded_rng;
use hint_data::image::Image;
use hint_data::synth::{degrade, synth_clean, Degradation, DegradationSpec};
use rand::Rng;
use serde::Serialize;

use crate::config::TrainConfig;
use crate::error::Result;
use crate::train::train_on_pairs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Full,
    IntraOnly,
    InterOnly,
    AttentionOnly,
}

impl Variant {
    pub const ALL: [Variant; 4] =
        [Variant::Full, Variant::IntraOnly, Variant::InterOnly, Variant::AttentionOnly];

    fn switches(self) -> (bool, bool) {
        match self {
            Variant::Full => (true, true),
            Variant::IntraOnly => (true, false),
            Variant::InterOnly => (false, true),
            Variant::AttentionOnly => (false, false),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct AblateRun {
    pub variant: Variant,
    pub seed: u64,
    pub final_loss: f64,
}

#[derive(Debug, Serialize)]
pub struct AblateSummary {
    pub runs: Vec<AblateRun>,
    /// Seeds where the full variant's final loss <= attention-only's.
    pub wins: usize,
    pub seeds: usize,
    pub pass: bool,
}

/// Three corruption families, one pair each, shared by every variant and
/// regenerated per seed.
fn suite(image_size: usize, seed: u64) -> Result<Vec<(Image, Image)>> {
    let kinds = [
        Degradation::GaussianNoise { sigma: 25.0 / 255.0 },
        Degradation::LowLightGamma { gamma: 2.2, gain: 0.9 },
        Degradation::RainStreaks { count: 12, angle_degrees: 60.0, intensity: 0.3 },
    ];
    let mut pairs = Vec::with_capacity(kinds.len());
    for (i, kind) in kinds.into_iter().enumerate() {
        let clean_seed: u64 = seeded_rng(seed, "ablate-clean", i as u64).gen();
        let spec_seed: u64 = seeded_rng(seed, "ablate-degrade", i as u64).gen();
        let clean = synth_clean(image_size, image_size, clean_seed)?;
        let degraded = degrade(&clean, &DegradationSpec { kind, seed: spec_seed })?;
        pairs.push((clean, degraded));
    }
    Ok(pairs)
}

/// Mean loss over the trailing 5% of steps (at least one), smoothing out
/// per-batch noise in the comparison.
fn final_loss(losses: &[f64]) -> f64 {
    let tail = (losses.len() / 20).max(1).min(losses.len());
    let slice = &losses[losses.len() - tail..];
    slice.iter().sum::<f64>() / slice.len() as f64
}

/// Trains every variant under `seeds` seeds on the shared suite and compares
/// full vs attention-only end losses.
pub fn ablate(cfg: &TrainConfig, seeds: usize) -> Result<AblateSummary> {
    cfg.validate_loose()?;
    let mut runs = Vec::new();
    let mut wins = 0;
    for offset in 0..seeds as u64 {
        let seed = cfg.seed.wrapping_add(offset);
        let pairs = suite(cfg.data.image_size, seed)?;
        let mut by_variant = Vec::new();
        for variant in Variant::ALL {
            let (use_intra, use_inter) = variant.switches();
            let run_cfg = TrainConfig {
                seed,
                model: hint_model::config::ModelConfig { use_intra, use_inter, ..cfg.model.clone() },
                ..cfg.clone()
            };
            let outcome = train_on_pairs::<f32>(&run_cfg, &pairs, None, false)?;
            let losses: Vec<f64> = outcome.log.step_losses().collect();
            let fl = final_loss(&losses);
            by_variant.push((variant, fl));
            runs.push(AblateRun { variant, seed, final_loss: fl });
        }
        let full = by_variant.iter().find(|(v, _)| *v == Variant::Full).unwrap().1;
        let plain = by_variant.iter().find(|(v, _)| *v == Variant::AttentionOnly).unwrap().1;
        if full <= plain {
            wins += 1;
        }
    }
    // Pass means full wins in at least two thirds of the seeds.
    let pass = wins * 3 >= seeds * 2 && seeds > 0;
    Ok(AblateSummary { runs, wins, seeds, pass })
}
