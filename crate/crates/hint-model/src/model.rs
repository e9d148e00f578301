//! Full restoration network: shallow feature conv, FFN-only encoder
//! levels with space-to-depth downsampling, attention bottleneck,
//! attention decoder levels with skip fusion, attention refinement,
//! residual 3×3 output conv.
//!
//! Output is `input + residual`; with the output conv zero-initialized,
//! the untrained network is an exact identity.

use hint_core::ops::concat_rows;
use hint_core::{CoreError, ParamBuilder, ParamSet, Result, Scalar, Tensor};

use crate::config::ModelConfig;
use crate::layers::{
    AttentionBlock, AttentionBlockCfg, ConvLayer, Downsample, EncoderBlock, Upsample,
};
use crate::qkcu::InterCache;

/// How much to record during a forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagMode {
    /// Cache statistics only.
    None,
    /// Additionally keep every attention block's per-head post-softmax
    /// score matrices (detached).
    Full,
}

/// Observables from one forward pass.
pub struct ForwardDiagnostics<T: Scalar> {
    /// EMA updates written into the inter cache.
    pub cache_updates: usize,
    /// Attention blocks executed.
    pub attention_blocks: usize,
    /// Final cache map [C'×C'] after the pass.
    pub final_cache: Tensor<T>,
    /// Per attention block (execution order), per head: post-softmax
    /// scores. Empty unless `DiagMode::Full`.
    pub block_scores: Vec<Vec<Tensor<T>>>,
}

struct DiagState<T: Scalar> {
    mode: DiagMode,
    attention_blocks: usize,
    block_scores: Vec<Vec<Tensor<T>>>,
}

impl<T: Scalar> DiagState<T> {
    fn new(mode: DiagMode) -> Self {
        DiagState { mode, attention_blocks: 0, block_scores: Vec::new() }
    }
}

pub struct Model<T: Scalar> {
    cfg: ModelConfig,
    params: ParamSet<T>,
    shallow: ConvLayer<T>,
    encoder: Vec<Vec<EncoderBlock<T>>>,
    down: Vec<Downsample<T>>,
    bottleneck: Vec<AttentionBlock<T>>,
    // Indexed by target level - 1 (level 1 first); execution order is
    // deepest level first.
    up: Vec<Upsample<T>>,
    fuse: Vec<ConvLayer<T>>,
    decoder: Vec<Vec<AttentionBlock<T>>>,
    refine: Vec<AttentionBlock<T>>,
    output: ConvLayer<T>,
}

impl<T: Scalar> Model<T> {
    /// Deterministic construction: every parameter is drawn from a
    /// stream keyed by (seed, parameter name), so two builds with the
    /// same seed agree bit for bit, and models that share a parameter
    /// name share its initial value regardless of which other blocks
    /// exist.
    pub fn build(cfg: &ModelConfig, seed: u64) -> Result<Self> {
        cfg.validate().map_err(|e| CoreError::Usage(e.to_string()))?;
        let n1 = cfg.levels;
        let mut pb = ParamBuilder::new(seed);

        let shallow = ConvLayer::build(&mut pb, "shallow", cfg.base_channels, 3, 3, 1, 1, 1)?;

        let mut encoder = Vec::with_capacity(n1 - 1);
        let mut down = Vec::with_capacity(n1 - 1);
        for l in 1..n1 {
            let c = cfg.level_channels(l);
            let mut blocks = Vec::with_capacity(cfg.blocks_per_level[l - 1]);
            for b in 0..cfg.blocks_per_level[l - 1] {
                blocks.push(EncoderBlock::build(&mut pb, &format!("encoder.l{l}.b{b}"), c, cfg.ffn_expansion)?);
            }
            encoder.push(blocks);
            down.push(Downsample::build(&mut pb, &format!("down.l{l}"), c)?);
        }

        let block_cfg = |channels: usize| AttentionBlockCfg {
            channels,
            heads: cfg.heads,
            head_ratio: &cfg.head_ratio,
            ffn_expansion: cfg.ffn_expansion,
            intra_reduction: cfg.intra_reduction,
            use_intra: cfg.use_intra,
            use_inter: cfg.use_inter,
        };

        let cb = cfg.level_channels(n1);
        let mut bottleneck = Vec::with_capacity(cfg.blocks_per_level[n1 - 1]);
        for b in 0..cfg.blocks_per_level[n1 - 1] {
            bottleneck.push(AttentionBlock::build(&mut pb, &format!("bottleneck.b{b}"), &block_cfg(cb))?);
        }

        let mut up = Vec::with_capacity(n1 - 1);
        let mut fuse = Vec::with_capacity(n1 - 1);
        let mut decoder = Vec::with_capacity(n1 - 1);
        for l in (1..n1).rev() {
            let c = cfg.level_channels(l);
            up.push(Upsample::build(&mut pb, &format!("up.l{l}"), 2 * c)?);
            fuse.push(ConvLayer::build(&mut pb, &format!("fuse.l{l}"), c, 2 * c, 1, 1, 0, 1)?);
            let mut blocks = Vec::with_capacity(cfg.blocks_per_level[l - 1]);
            for b in 0..cfg.blocks_per_level[l - 1] {
                blocks.push(AttentionBlock::build(&mut pb, &format!("decoder.l{l}.b{b}"), &block_cfg(c))?);
            }
            decoder.push(blocks);
        }
        up.reverse();
        fuse.reverse();
        decoder.reverse();

        let c1 = cfg.level_channels(1);
        let mut refine = Vec::with_capacity(cfg.refinement_blocks);
        for b in 0..cfg.refinement_blocks {
            refine.push(AttentionBlock::build(&mut pb, &format!("refine.b{b}"), &block_cfg(c1))?);
        }

        let output = if cfg.zero_init_output {
            ConvLayer::build_zero(&mut pb, "output", 3, c1, 3, 1)?
        } else {
            ConvLayer::build(&mut pb, "output", 3, c1, 3, 1, 1, 1)?
        };

        Ok(Model {
            cfg: cfg.clone(),
            params: pb.finish(),
            shallow,
            encoder,
            down,
            bottleneck,
            up,
            fuse,
            decoder,
            refine,
            output,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ParamSet<T> {
        &self.params
    }

    /// Fresh per-pass cache at the base width.
    pub fn new_cache(&self) -> InterCache<T> {
        InterCache::new(self.cfg.base_channels, self.cfg.alpha)
    }

    /// Shallow features → bottleneck-level features plus per-level skip
    /// features (level 1 first). Attention-free by design.
    pub fn encode(&self, f_shallow: &Tensor<T>) -> Result<(Tensor<T>, Vec<Tensor<T>>)> {
        let mut skips = Vec::with_capacity(self.encoder.len());
        let mut x = f_shallow.clone();
        for (blocks, down) in self.encoder.iter().zip(&self.down) {
            for blk in blocks {
                x = blk.forward(&x)?;
            }
            skips.push(x.clone());
            x = down.apply(&x)?;
        }
        Ok((x, skips))
    }

    /// Runs the bottleneck attention stack, then walks the decoder
    /// levels deepest-first: upsample, fuse the level's skip
    /// (channel concat + 1×1 conv), run the level's blocks.
    pub fn decode(
        &self,
        bottleneck: &Tensor<T>,
        skips: &[Tensor<T>],
        cache: &mut InterCache<T>,
    ) -> Result<Tensor<T>> {
        self.decode_diag(bottleneck, skips, cache, &mut DiagState::new(DiagMode::None))
    }

    fn decode_diag(
        &self,
        bottleneck: &Tensor<T>,
        skips: &[Tensor<T>],
        cache: &mut InterCache<T>,
        diag: &mut DiagState<T>,
    ) -> Result<Tensor<T>> {
        if skips.len() != self.decoder.len() {
            return Err(CoreError::dimension(
                "decode",
                format!("{} skip features for {} decoder levels", skips.len(), self.decoder.len()),
            ));
        }
        let mut x = bottleneck.clone();
        for blk in &self.bottleneck {
            x = run_block(blk, &x, cache, diag)?;
        }
        for l in (1..=self.decoder.len()).rev() {
            x = self.up[l - 1].apply(&x)?;
            let skip = &skips[l - 1];
            if skip.shape() != x.shape() {
                return Err(CoreError::dimension(
                    "decode",
                    format!("skip {:?} vs upsampled {:?} at level {}", skip.shape(), x.shape(), l),
                ));
            }
            let fused = self.fuse[l - 1].apply(&concat_rows(&[x, skip.clone()])?)?;
            x = fused;
            for blk in &self.decoder[l - 1] {
                x = run_block(blk, &x, cache, diag)?;
            }
        }
        Ok(x)
    }

    /// Full-resolution attention blocks after the last decoder level.
    pub fn refine(&self, f_dec: &Tensor<T>, cache: &mut InterCache<T>) -> Result<Tensor<T>> {
        self.refine_diag(f_dec, cache, &mut DiagState::new(DiagMode::None))
    }

    fn refine_diag(
        &self,
        f_dec: &Tensor<T>,
        cache: &mut InterCache<T>,
        diag: &mut DiagState<T>,
    ) -> Result<Tensor<T>> {
        let mut x = f_dec.clone();
        for blk in &self.refine {
            x = run_block(blk, &x, cache, diag)?;
        }
        Ok(x)
    }

    pub fn forward(&self, image: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(self.forward_diag(image, DiagMode::None)?.0)
    }

    /// `restored = image + residual`. The inter cache is zeroed at
    /// entry and updated bottleneck → decoder → refinement.
    pub fn forward_diag(
        &self,
        image: &Tensor<T>,
        mode: DiagMode,
    ) -> Result<(Tensor<T>, ForwardDiagnostics<T>)> {
        let s = image.shape();
        if s.len() != 3 || s[0] != 3 {
            return Err(CoreError::Usage(format!("input must be [3,H,W], got {:?}", s)));
        }
        let div = self.cfg.spatial_divisor();
        if s[1] % div != 0 || s[2] % div != 0 {
            return Err(CoreError::Usage(format!(
                "input {}×{} must be a multiple of {} on both axes",
                s[1], s[2], div
            )));
        }
        let mut cache = self.new_cache();
        let mut diag = DiagState::new(mode);

        let fs = self.shallow.apply(image)?;
        let (bottom, skips) = self.encode(&fs)?;
        let dec = self.decode_diag(&bottom, &skips, &mut cache, &mut diag)?;
        let refined = self.refine_diag(&dec, &mut cache, &mut diag)?;
        let residual = self.output.apply(&refined)?;
        let restored = image.add(&residual)?;

        Ok((
            restored,
            ForwardDiagnostics {
                cache_updates: cache.updates(),
                attention_blocks: diag.attention_blocks,
                final_cache: cache.map().clone(),
                block_scores: diag.block_scores,
            },
        ))
    }
}

fn run_block<T: Scalar>(
    blk: &AttentionBlock<T>,
    x: &Tensor<T>,
    cache: &mut InterCache<T>,
    diag: &mut DiagState<T>,
) -> Result<Tensor<T>> {
    let (out, trace) = blk.forward(x, cache)?;
    diag.attention_blocks += 1;
    if diag.mode == DiagMode::Full {
        diag.block_scores.push(trace.head_scores);
    }
    Ok(out)
}
