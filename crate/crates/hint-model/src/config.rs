//! Model hyperparameters and their validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config error: {0}")]
    Invalid(String),
}

fn default_true() -> bool {
    true
}

fn default_ffn_expansion() -> f64 {
    2.66
}

fn default_intra_reduction() -> usize {
    4
}

fn default_alpha() -> f64 {
    0.9
}

/// Architecture hyperparameters.
///
/// Level `l` (1-based) runs at `base_channels * 2^(l-1)` channels and
/// `1/2^(l-1)` of the input resolution. The deepest level is the
/// bottleneck; decoder levels mirror the encoder levels above it.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Channel width at the first level (C).
    pub base_channels: usize,
    /// Number of resolution levels (the last one is the bottleneck).
    pub levels: usize,
    /// Blocks per level, one entry per level. Encoder levels reuse their
    /// entry for the matching decoder level; the last entry is the
    /// bottleneck depth.
    pub blocks_per_level: Vec<usize>,
    /// Attention blocks after the last decoder level, at full resolution.
    pub refinement_blocks: usize,
    /// Attention heads per block.
    pub heads: usize,
    /// Unequal head-split ratio, non-decreasing, one entry per head.
    pub head_ratio: Vec<usize>,
    /// EMA retention factor of the inter-layer cache.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Hidden-width multiplier of the gated feed-forward blocks.
    #[serde(default = "default_ffn_expansion")]
    pub ffn_expansion: f64,
    /// Channel reduction of the intra-layer modulation bottleneck.
    #[serde(default = "default_intra_reduction")]
    pub intra_reduction: usize,
    /// Enable intra-layer (within-block) cache modulation.
    #[serde(default = "default_true")]
    pub use_intra: bool,
    /// Enable inter-layer (EMA cache) attention-map modulation.
    #[serde(default = "default_true")]
    pub use_inter: bool,
    /// Zero-initialize the final output conv so the network is an exact
    /// identity at init. Gradient checking disables this: with a zero
    /// output conv every upstream gradient is identically zero.
    #[serde(default = "default_true")]
    pub zero_init_output: bool,
}

impl ModelConfig {
    /// Published full-scale configuration.
    pub fn full() -> Self {
        ModelConfig {
            base_channels: 48,
            levels: 4,
            blocks_per_level: vec![4, 6, 6, 6],
            refinement_blocks: 4,
            heads: 4,
            head_ratio: vec![1, 2, 2, 3],
            alpha: 0.9,
            ffn_expansion: 2.66,
            intra_reduction: 4,
            use_intra: true,
            use_inter: true,
            zero_init_output: true,
        }
    }

    /// Desk-scale configuration for tests and smoke training.
    pub fn tiny() -> Self {
        ModelConfig {
            base_channels: 16,
            levels: 4,
            blocks_per_level: vec![1, 1, 1, 1],
            refinement_blocks: 1,
            heads: 4,
            head_ratio: vec![1, 2, 2, 3],
            alpha: 0.9,
            ffn_expansion: 2.66,
            intra_reduction: 4,
            use_intra: true,
            use_inter: true,
            zero_init_output: true,
        }
    }

    /// Channel width of 1-based level `l`.
    pub fn level_channels(&self, l: usize) -> usize {
        self.base_channels << (l - 1)
    }

    /// Input extents must be divisible by this.
    pub fn spatial_divisor(&self) -> usize {
        1 << (self.levels - 1)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.levels < 2 {
            return Err(ConfigError::Invalid(format!("levels must be >= 2, got {}", self.levels)));
        }
        if self.blocks_per_level.len() != self.levels {
            return Err(ConfigError::Invalid(format!(
                "blocks_per_level has {} entries for {} levels",
                self.blocks_per_level.len(),
                self.levels
            )));
        }
        if self.blocks_per_level.iter().any(|&b| b == 0) || self.refinement_blocks == 0 {
            return Err(ConfigError::Invalid("block counts must be positive".to_string()));
        }
        if self.heads == 0 || self.head_ratio.len() != self.heads {
            return Err(ConfigError::Invalid(format!(
                "head_ratio has {} entries for {} heads",
                self.head_ratio.len(),
                self.heads
            )));
        }
        if self.head_ratio.windows(2).any(|w| w[0] > w[1]) {
            return Err(ConfigError::Invalid(format!(
                "head_ratio must be non-decreasing, got {:?}",
                self.head_ratio
            )));
        }
        if self.head_ratio.iter().any(|&r| r == 0) {
            return Err(ConfigError::Invalid("head_ratio entries must be positive".to_string()));
        }
        let ratio_sum: usize = self.head_ratio.iter().sum();
        for l in 1..=self.levels {
            let c = self.level_channels(l);
            if c % ratio_sum != 0 {
                return Err(ConfigError::Invalid(format!(
                    "level {} width {} is not divisible by head ratio sum {}",
                    l, c, ratio_sum
                )));
            }
            if c % self.intra_reduction != 0 {
                return Err(ConfigError::Invalid(format!(
                    "level {} width {} is not divisible by intra reduction {}",
                    l, c, self.intra_reduction
                )));
            }
        }
        if self.base_channels % 2 != 0 {
            return Err(ConfigError::Invalid(format!(
                "base_channels must be even for the resampling convs, got {}",
                self.base_channels
            )));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(ConfigError::Invalid(format!("alpha must be in [0, 1), got {}", self.alpha)));
        }
        if self.ffn_expansion <= 0.0 {
            return Err(ConfigError::Invalid("ffn_expansion must be positive".to_string()));
        }
        if self.intra_reduction == 0 {
            return Err(ConfigError::Invalid("intra_reduction must be positive".to_string()));
        }
        Ok(())
    }
}
