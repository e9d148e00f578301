//! Building blocks: convolutions, normalization, the gated
//! feed-forward, resampling, and the two block flavors.

use hint_core::ops::LAYER_NORM_EPS;
use hint_core::{CoreError, ParamBuilder, Result, Scalar, Tensor};

use crate::hmha::{hmha_forward, HeadPartition, HmhaOutput, HmhaParams};
use crate::qkcu::{
    inter_cache_layer, intra_cache_build, intra_modulate, InterCache, InterModParams,
    IntraModParams,
};

/// Conv2d with per-channel bias.
pub struct ConvLayer<T: Scalar> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
    stride: usize,
    pad: usize,
    groups: usize,
}

impl<T: Scalar> ConvLayer<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        pb: &mut ParamBuilder<T>,
        prefix: &str,
        cout: usize,
        cin: usize,
        k: usize,
        stride: usize,
        pad: usize,
        groups: usize,
    ) -> Result<Self> {
        let fan_in = (cin / groups) * k * k;
        Ok(ConvLayer {
            weight: pb
                .uniform_fan_in(&format!("{prefix}.weight"), vec![cout, cin / groups, k, k], fan_in)?
                .tensor()
                .clone(),
            bias: pb.zeros(&format!("{prefix}.bias"), vec![cout])?.tensor().clone(),
            stride,
            pad,
            groups,
        })
    }

    /// Zero-initialized variant; with a zero kernel and bias the layer
    /// outputs exactly zero.
    pub fn build_zero(
        pb: &mut ParamBuilder<T>,
        prefix: &str,
        cout: usize,
        cin: usize,
        k: usize,
        pad: usize,
    ) -> Result<Self> {
        Ok(ConvLayer {
            weight: pb.zeros(&format!("{prefix}.weight"), vec![cout, cin, k, k])?.tensor().clone(),
            bias: pb.zeros(&format!("{prefix}.bias"), vec![cout])?.tensor().clone(),
            stride: 1,
            pad,
            groups: 1,
        })
    }

    pub fn apply(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        x.conv2d(&self.weight, self.stride, self.pad, self.groups)?.add_bias_per_row(&self.bias)
    }
}

/// Per-channel layer normalization over the channel extent at every
/// spatial position.
pub struct LayerNorm<T: Scalar> {
    pub gain: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> LayerNorm<T> {
    pub fn build(pb: &mut ParamBuilder<T>, prefix: &str, c: usize) -> Result<Self> {
        Ok(LayerNorm {
            gain: pb.constant(&format!("{prefix}.gain"), vec![c], 1.0)?.tensor().clone(),
            bias: pb.zeros(&format!("{prefix}.bias"), vec![c])?.tensor().clone(),
        })
    }

    pub fn apply(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        x.layer_norm(&self.gain, &self.bias, LAYER_NORM_EPS)
    }
}

/// Gated-depthwise feed-forward: pointwise expand to two hidden paths,
/// 3×3 depthwise, GELU-gate one path with the other, project back.
pub struct Ffn<T: Scalar> {
    expand: ConvLayer<T>,
    depthwise: ConvLayer<T>,
    project: ConvLayer<T>,
    hidden: usize,
}

impl<T: Scalar> Ffn<T> {
    pub fn build(pb: &mut ParamBuilder<T>, prefix: &str, c: usize, expansion: f64) -> Result<Self> {
        let hidden = ((c as f64) * expansion).floor() as usize;
        if hidden == 0 {
            return Err(CoreError::Usage(format!("ffn hidden width underflow: {} × {}", c, expansion)));
        }
        Ok(Ffn {
            expand: ConvLayer::build(pb, &format!("{prefix}.pw1"), 2 * hidden, c, 1, 1, 0, 1)?,
            depthwise: ConvLayer::build(pb, &format!("{prefix}.dw"), 2 * hidden, 2 * hidden, 3, 1, 1, 2 * hidden)?,
            project: ConvLayer::build(pb, &format!("{prefix}.pw2"), c, hidden, 1, 1, 0, 1)?,
            hidden,
        })
    }

    pub fn apply(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let s = x.shape();
        let (h, w) = (s[1], s[2]);
        let hw = h * w;
        let both = self.depthwise.apply(&self.expand.apply(x)?)?.reshape(vec![2 * self.hidden, hw])?;
        let a = both.slice_rows(0, self.hidden)?;
        let b = both.slice_rows(self.hidden, self.hidden)?;
        let gated = a.gelu().mul(&b)?.reshape(vec![self.hidden, h, w])?;
        self.project.apply(&gated)
    }
}

/// 3×3 conv halving channels, then space-to-depth: [C,H,W] → [2C,H/2,W/2].
pub struct Downsample<T: Scalar> {
    conv: ConvLayer<T>,
}

impl<T: Scalar> Downsample<T> {
    pub fn build(pb: &mut ParamBuilder<T>, prefix: &str, c: usize) -> Result<Self> {
        if c % 2 != 0 {
            return Err(CoreError::Usage(format!("downsample needs even channel count, got {}", c)));
        }
        Ok(Downsample { conv: ConvLayer::build(pb, prefix, c / 2, c, 3, 1, 1, 1)? })
    }

    pub fn apply(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.conv.apply(x)?.pixel_unshuffle(2)
    }
}

/// 1×1 conv doubling channels, then depth-to-space: [C,H,W] → [C/2,2H,2W].
pub struct Upsample<T: Scalar> {
    conv: ConvLayer<T>,
}

impl<T: Scalar> Upsample<T> {
    pub fn build(pb: &mut ParamBuilder<T>, prefix: &str, c: usize) -> Result<Self> {
        Ok(Upsample { conv: ConvLayer::build(pb, prefix, 2 * c, c, 1, 1, 0, 1)? })
    }

    pub fn apply(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.conv.apply(x)?.pixel_shuffle(2)
    }
}

/// Encoder block: FFN only, pre-norm residual. The encoder carries no
/// attention parameters by design.
pub struct EncoderBlock<T: Scalar> {
    ln: LayerNorm<T>,
    ffn: Ffn<T>,
}

impl<T: Scalar> EncoderBlock<T> {
    pub fn build(pb: &mut ParamBuilder<T>, prefix: &str, c: usize, expansion: f64) -> Result<Self> {
        Ok(EncoderBlock {
            ln: LayerNorm::build(pb, &format!("{prefix}.ln"), c)?,
            ffn: Ffn::build(pb, &format!("{prefix}.ffn"), c, expansion)?,
        })
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        x.add(&self.ffn.apply(&self.ln.apply(x)?)?)
    }
}

/// What an attention block reports about one evaluation.
pub struct BlockTrace<T: Scalar> {
    /// Post-softmax score matrix per head, detached.
    pub head_scores: Vec<Tensor<T>>,
    /// Whether this block wrote an EMA update into the inter cache.
    pub cache_updated: bool,
}

/// Decoder-style block: pre-norm attention residual (optionally routed
/// through the intra modulation), then pre-norm FFN residual. Updates
/// the inter cache after its attention evaluation when enabled.
pub struct AttentionBlock<T: Scalar> {
    ln1: LayerNorm<T>,
    attn: HmhaParams<T>,
    partition: HeadPartition,
    intra: Option<IntraModParams<T>>,
    inter: Option<Vec<InterModParams<T>>>,
    ln2: LayerNorm<T>,
    ffn: Ffn<T>,
}

pub struct AttentionBlockCfg<'a> {
    pub channels: usize,
    pub heads: usize,
    pub head_ratio: &'a [usize],
    pub ffn_expansion: f64,
    pub intra_reduction: usize,
    pub use_intra: bool,
    pub use_inter: bool,
}

impl<T: Scalar> AttentionBlock<T> {
    pub fn build(pb: &mut ParamBuilder<T>, prefix: &str, cfg: &AttentionBlockCfg<'_>) -> Result<Self> {
        let c = cfg.channels;
        let partition = crate::hmha::hierarchical_partition(c, cfg.head_ratio)?;
        let intra = if cfg.use_intra {
            Some(IntraModParams::build(pb, &format!("{prefix}.intra"), c, cfg.intra_reduction)?)
        } else {
            None
        };
        let inter = if cfg.use_inter {
            let mut mods = Vec::with_capacity(cfg.heads);
            for (i, &ci) in partition.sizes().iter().enumerate() {
                mods.push(InterModParams::build(pb, &format!("{prefix}.inter.h{i}"), ci)?);
            }
            Some(mods)
        } else {
            None
        };
        Ok(AttentionBlock {
            ln1: LayerNorm::build(pb, &format!("{prefix}.ln1"), c)?,
            attn: HmhaParams::build(pb, &format!("{prefix}.attn"), c, cfg.heads)?,
            partition,
            intra,
            inter,
            ln2: LayerNorm::build(pb, &format!("{prefix}.ln2"), c)?,
            ffn: Ffn::build(pb, &format!("{prefix}.ffn"), c, cfg.ffn_expansion)?,
        })
    }

    pub fn partition(&self) -> &HeadPartition {
        &self.partition
    }

    pub fn forward(
        &self,
        x: &Tensor<T>,
        cache: &mut InterCache<T>,
    ) -> Result<(Tensor<T>, BlockTrace<T>)> {
        let normed = self.ln1.apply(x)?;
        let inter_ref = self.inter.as_ref().map(|mods| (&*cache, mods.as_slice()));
        let HmhaOutput { out, heads_qk, att_maps, post_softmax } =
            hmha_forward(&normed, &self.attn, &self.partition, inter_ref)?;

        let branch = match &self.intra {
            Some(p) => {
                let qk_cache = intra_cache_build(&heads_qk)?;
                intra_modulate(&qk_cache, &out, p)?
            }
            None => out,
        };
        let x1 = x.add(&branch)?;
        let x2 = x1.add(&self.ffn.apply(&self.ln2.apply(&x1)?)?)?;

        let cache_updated = if self.inter.is_some() {
            let layer_map = inter_cache_layer(&att_maps, &self.partition, cache.side())?;
            cache.update(&layer_map)?;
            true
        } else {
            false
        };
        Ok((x2, BlockTrace { head_scores: post_softmax, cache_updated }))
    }
}
