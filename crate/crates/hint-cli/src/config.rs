//! Run configuration: one JSON file drives training, evaluation cadence,
//! checkpointing, and data synthesis. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use hint_data::{DegradationSpec, PATCH_DIVISOR};
use hint_model::ModelConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossSpec {
    L1,
}

/// Where and how often to write checkpoints. `every = 0` means final only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointCfg {
    pub path: PathBuf,
    #[serde(default)]
    pub every: u64,
}

/// Synthetic dataset description: `n_images` square clean images of side
/// `image_size`, each degraded once, plus one held-out pair for eval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataCfg {
    pub degradation: DegradationSpec,
    #[serde(default = "default_image_size")]
    pub image_size: usize,
    #[serde(default = "default_n_images")]
    pub n_images: usize,
    /// Defaults to `image_size` (whole-image training).
    #[serde(default)]
    pub patch_size: Option<usize>,
}

fn default_image_size() -> usize {
    32
}

fn default_n_images() -> usize {
    1
}

impl DataCfg {
    pub fn patch(&self) -> usize {
        self.patch_size.unwrap_or(self.image_size)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub seed: u64,
    pub steps: u64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_lr_min")]
    pub lr_min: f64,
    #[serde(default = "default_betas")]
    pub betas: (f64, f64),
    #[serde(default = "default_weight_decay")]
    pub weight_decay: f64,
    #[serde(default = "default_loss")]
    pub loss: LossSpec,
    pub checkpoint: CheckpointCfg,
    /// Steps between held-out metric evaluations; 0 disables.
    #[serde(default)]
    pub eval_every: u64,
    pub model: ModelConfig,
    pub data: DataCfg,
}

fn default_batch() -> usize {
    1
}

fn default_lr() -> f64 {
    2e-4
}

fn default_lr_min() -> f64 {
    1e-6
}

fn default_betas() -> (f64, f64) {
    (0.9, 0.999)
}

fn default_weight_decay() -> f64 {
    1e-4
}

fn default_loss() -> LossSpec {
    LossSpec::L1
}

impl TrainConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| CliError::Data(format!("{}: {e}", path.as_ref().display())))?;
        let cfg: TrainConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_loose()?;
        if self.steps < 1 {
            return Err(CliError::Usage("steps must be >= 1".into()));
        }
        Ok(())
    }

    /// Everything in [`validate`] except the steps bound. `train()` accepts
    /// a zero-step config (emit the initialization checkpoint and stop), but
    /// run config files must ask for at least one step.
    pub(crate) fn validate_loose(&self) -> Result<()> {
        if !self.lr.is_finite() || self.lr <= 0.0 {
            return Err(CliError::Usage(format!("lr {} must be > 0", self.lr)));
        }
        if !self.lr_min.is_finite() || self.lr_min < 0.0 || self.lr_min > self.lr {
            return Err(CliError::Usage(format!(
                "lr_min {} must be in [0, lr = {}]",
                self.lr_min, self.lr
            )));
        }
        for (i, b) in [self.betas.0, self.betas.1].into_iter().enumerate() {
            if !b.is_finite() || !(0.0..1.0).contains(&b) {
                return Err(CliError::Usage(format!("beta{} {b} must be in [0, 1)", i + 1)));
            }
        }
        if !self.weight_decay.is_finite() || self.weight_decay < 0.0 {
            return Err(CliError::Usage(format!(
                "weight_decay {} must be >= 0",
                self.weight_decay
            )));
        }
        if self.batch_size < 1 {
            return Err(CliError::Usage("batch_size must be >= 1".into()));
        }
        self.model.validate()?;
        self.data.degradation.validate()?;
        if self.data.n_images < 1 {
            return Err(CliError::Usage("n_images must be >= 1".into()));
        }
        let patch = self.data.patch();
        let divisor = self.model.spatial_divisor().max(PATCH_DIVISOR);
        if patch == 0 || patch % divisor != 0 {
            return Err(CliError::Usage(format!(
                "patch size {patch} must be a positive multiple of {divisor}"
            )));
        }
        if patch > self.data.image_size {
            return Err(CliError::Usage(format!(
                "patch size {patch} exceeds image size {}",
                self.data.image_size
            )));
        }
        if self.data.image_size % self.model.spatial_divisor() != 0 {
            return Err(CliError::Usage(format!(
                "image size {} must be a multiple of {} for held-out eval",
                self.data.image_size,
                self.model.spatial_divisor()
            )));
        }
        Ok(())
    }
}
