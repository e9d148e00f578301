//! Channel attention with correlation-driven reranking and unequal,
//! non-decreasing head subspaces.
//!
//! Scores are C_i×C_i per head (channels attend to channels, spatial
//! positions form the reduction axis), so cost stays linear in image
//! size. Before the head split, channels are reordered by how strongly
//! each correlates with the mean channel of V, grouping redundant
//! channels into the same head.

use std::cmp::Ordering;

use hint_core::ops::concat_rows;
use hint_core::{CoreError, ParamBuilder, Result, Scalar, Tensor};

use crate::qkcu::{inter_modulate, InterCache, InterModParams};

/// Channel counts per head, non-decreasing, summing to the layer width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadPartition {
    sizes: Vec<usize>,
}

impl HeadPartition {
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn heads(&self) -> usize {
        self.sizes.len()
    }

    pub fn channels(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Row offset of each head in the stacked [C×HW] layout.
    pub fn offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.sizes.len());
        let mut acc = 0;
        for &s in &self.sizes {
            off.push(acc);
            acc += s;
        }
        off
    }
}

/// `sizes[i] = C·ratio[i] / Σratio`, exact division required.
pub fn hierarchical_partition(c: usize, ratio: &[usize]) -> Result<HeadPartition> {
    if ratio.is_empty() || ratio.iter().any(|&r| r == 0) {
        return Err(CoreError::Usage(format!("head ratio must be non-empty and positive, got {:?}", ratio)));
    }
    if ratio.windows(2).any(|w| w[0] > w[1]) {
        return Err(CoreError::Usage(format!("head ratio must be non-decreasing, got {:?}", ratio)));
    }
    let sum: usize = ratio.iter().sum();
    if c % sum != 0 {
        return Err(CoreError::Usage(format!(
            "channel count {} is not divisible by head ratio sum {}",
            c, sum
        )));
    }
    let unit = c / sum;
    Ok(HeadPartition { sizes: ratio.iter().map(|&r| r * unit).collect() })
}

/// Bijection on channel indices with its inverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelPermutation {
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl ChannelPermutation {
    pub fn from_forward(forward: Vec<usize>) -> Self {
        let mut inverse = vec![0usize; forward.len()];
        for (pos, &src) in forward.iter().enumerate() {
            inverse[src] = pos;
        }
        ChannelPermutation { forward, inverse }
    }

    /// `out[pos] = in[forward[pos]]`.
    pub fn forward_index(&self) -> &[usize] {
        &self.forward
    }

    /// Gathering by this undoes gathering by `forward_index`.
    pub fn inverse_index(&self) -> &[usize] {
        &self.inverse
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }
}

/// Pearson correlation coefficient. Returns 0 if either input is
/// constant (zero variance), by convention.
pub fn pearson_correlation<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(CoreError::dimension(
            "pearson_correlation",
            format!("lengths {} vs {}", a.len(), b.len()),
        ));
    }
    if a.len() < 2 {
        return Err(CoreError::dimension("pearson_correlation", "need at least 2 samples"));
    }
    // Exact constancy test: max == min, immune to cancellation noise.
    let constant = |v: &[T]| {
        let mut lo = v[0];
        let mut hi = v[0];
        for &x in &v[1..] {
            lo = lo.min(x);
            hi = hi.max(x);
        }
        lo == hi
    };
    if constant(a) || constant(b) {
        return Ok(T::ZERO);
    }
    let n = T::from_f64(a.len() as f64);
    let ma = a.iter().copied().sum::<T>() / n;
    let mb = b.iter().copied().sum::<T>() / n;
    let mut cov = T::ZERO;
    let mut va = T::ZERO;
    let mut vb = T::ZERO;
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    Ok(cov / (va * vb).sqrt())
}

/// Channel order by descending correlation with the mean channel of
/// `v` [C×HW]; ties break by ascending original index. Reads values
/// only; the result is treated as a constant in backward passes.
///
/// A single spatial position makes every channel constant, so all
/// scores are 0 and the tie-break yields the identity permutation.
pub fn rerank_permutation<T: Scalar>(v: &Tensor<T>) -> Result<ChannelPermutation> {
    let s = v.shape();
    if s.len() != 2 || s[1] == 0 {
        return Err(CoreError::dimension(
            "rerank_permutation",
            format!("expected [C, HW] with HW >= 1, got {:?}", s),
        ));
    }
    let (c, hw) = (s[0], s[1]);
    if hw < 2 {
        return Ok(ChannelPermutation::from_forward((0..c).collect()));
    }
    let data = v.data();
    let inv_c = T::from_f64(1.0 / c as f64);
    let mut mean = vec![T::ZERO; hw];
    for row in data.chunks(hw) {
        for (m, &x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m *= inv_c;
    }
    let mut scores = Vec::with_capacity(c);
    for row in data.chunks(hw) {
        scores.push(pearson_correlation(row, &mean)?);
    }
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&i, &j| {
        scores[j].partial_cmp(&scores[i]).unwrap_or(Ordering::Equal).then_with(|| i.cmp(&j))
    });
    Ok(ChannelPermutation::from_forward(order))
}

/// Projection and temperature parameters of one attention layer.
pub struct HmhaParams<T: Scalar> {
    pub qkv_pw_w: Tensor<T>,
    pub qkv_pw_b: Tensor<T>,
    pub qkv_dw_w: Tensor<T>,
    pub qkv_dw_b: Tensor<T>,
    pub out_w: Tensor<T>,
    pub out_b: Tensor<T>,
    /// One learnable scalar per head, init 1.0.
    pub temperature: Vec<Tensor<T>>,
    channels: usize,
}

impl<T: Scalar> HmhaParams<T> {
    pub fn build(pb: &mut ParamBuilder<T>, prefix: &str, c: usize, heads: usize) -> Result<Self> {
        let mut temperature = Vec::with_capacity(heads);
        for i in 0..heads {
            temperature.push(pb.constant(&format!("{prefix}.temp{i}"), vec![1], 1.0)?.tensor().clone());
        }
        Ok(HmhaParams {
            qkv_pw_w: pb
                .uniform_fan_in(&format!("{prefix}.qkv_pw.weight"), vec![3 * c, c, 1, 1], c)?
                .tensor()
                .clone(),
            qkv_pw_b: pb.zeros(&format!("{prefix}.qkv_pw.bias"), vec![3 * c])?.tensor().clone(),
            qkv_dw_w: pb
                .uniform_fan_in(&format!("{prefix}.qkv_dw.weight"), vec![3 * c, 1, 3, 3], 9)?
                .tensor()
                .clone(),
            qkv_dw_b: pb.zeros(&format!("{prefix}.qkv_dw.bias"), vec![3 * c])?.tensor().clone(),
            out_w: pb
                .uniform_fan_in(&format!("{prefix}.out.weight"), vec![c, c, 1, 1], c)?
                .tensor()
                .clone(),
            out_b: pb.zeros(&format!("{prefix}.out.bias"), vec![c])?.tensor().clone(),
            temperature,
            channels: c,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }
}

/// One head's attention evaluation.
pub struct HeadEval<T: Scalar> {
    /// L2-normalized Q rows, [C_i×HW].
    pub q_norm: Tensor<T>,
    /// L2-normalized K rows, [C_i×HW].
    pub k_norm: Tensor<T>,
    /// Pre-softmax score map after temperature and optional inter
    /// modulation, [C_i×C_i], in the graph.
    pub f_att: Tensor<T>,
    /// Softmax of `f_att` over the last axis, in the graph.
    pub soft: Tensor<T>,
    /// `soft · V`, [C_i×HW].
    pub out: Tensor<T>,
}

/// Single-head transposed attention on raw (already permuted and
/// sliced) Q, K, V of shape [C_i×HW]: normalize Q and K rows, scale
/// their Gram matrix by `temperature`, optionally modulate with the
/// inter cache, softmax rows, weigh V.
pub fn attention_head<T: Scalar>(
    q: &Tensor<T>,
    k: &Tensor<T>,
    v: &Tensor<T>,
    temperature: &Tensor<T>,
    inter: Option<(&InterCache<T>, &InterModParams<T>)>,
) -> Result<HeadEval<T>> {
    if q.shape().len() != 2 || q.shape() != k.shape() || q.shape() != v.shape() {
        return Err(CoreError::dimension(
            "attention_head",
            format!("Q {:?} / K {:?} / V {:?} must agree", q.shape(), k.shape(), v.shape()),
        ));
    }
    let q_norm = q.l2_normalize_rows()?;
    let k_norm = k.l2_normalize_rows()?;
    let scores = q_norm.matmul_nt(&k_norm)?.scale_by(temperature)?;
    let f_att = match inter {
        Some((cache, params)) => inter_modulate(cache, &scores, params)?,
        None => scores,
    };
    let soft = f_att.softmax(1)?;
    let out = soft.matmul(v)?;
    Ok(HeadEval { q_norm, k_norm, f_att, soft, out })
}

/// Everything a block needs from one attention evaluation.
pub struct HmhaOutput<T: Scalar> {
    /// [C×H×W] attention output after inverse reranking and projection.
    pub out: Tensor<T>,
    /// Per head: (Q_i, K_i), post-permutation, post-normalization,
    /// [C_i×HW]. Feeds the intra cache; stays in the graph.
    pub heads_qk: Vec<(Tensor<T>, Tensor<T>)>,
    /// Per head: modulated pre-softmax score map [C_i×C_i], detached.
    /// Feeds the inter cache update.
    pub att_maps: Vec<Tensor<T>>,
    /// Per head: post-softmax score matrix, detached, for diagnostics.
    pub post_softmax: Vec<Tensor<T>>,
}

/// Full attention pipeline: QKV projection, rerank, head split,
/// normalized channel attention with optional inter-cache modulation,
/// inverse rerank, output projection. `x` is layer-normalized by the
/// caller.
pub fn hmha_forward<T: Scalar>(
    x: &Tensor<T>,
    params: &HmhaParams<T>,
    partition: &HeadPartition,
    inter: Option<(&InterCache<T>, &[InterModParams<T>])>,
) -> Result<HmhaOutput<T>> {
    let s = x.shape();
    if s.len() != 3 {
        return Err(CoreError::dimension("hmha_forward", format!("expected [C,H,W], got {:?}", s)));
    }
    let (c, h, w) = (s[0], s[1], s[2]);
    if c != partition.channels() || c != params.channels {
        return Err(CoreError::dimension(
            "hmha_forward",
            format!("{} input channels vs partition {} / params {}", c, partition.channels(), params.channels),
        ));
    }
    if let Some((cache, mods)) = inter {
        if mods.len() != partition.heads() {
            return Err(CoreError::dimension(
                "hmha_forward",
                format!("{} modulation heads vs partition {}", mods.len(), partition.heads()),
            ));
        }
        let _ = cache;
    }
    let hw = h * w;

    let qkv = x
        .conv2d(&params.qkv_pw_w, 1, 0, 1)?
        .add_bias_per_row(&params.qkv_pw_b)?
        .conv2d(&params.qkv_dw_w, 1, 1, 3 * c)?
        .add_bias_per_row(&params.qkv_dw_b)?
        .reshape(vec![3 * c, hw])?;
    let q = qkv.slice_rows(0, c)?;
    let k = qkv.slice_rows(c, c)?;
    let v = qkv.slice_rows(2 * c, c)?;

    let perm = rerank_permutation(&v)?;
    let qp = q.gather_rows(perm.forward_index())?;
    let kp = k.gather_rows(perm.forward_index())?;
    let vp = v.gather_rows(perm.forward_index())?;

    let heads = partition.heads();
    let offsets = partition.offsets();
    let mut heads_qk = Vec::with_capacity(heads);
    let mut att_maps = Vec::with_capacity(heads);
    let mut post_softmax = Vec::with_capacity(heads);
    let mut head_outs = Vec::with_capacity(heads);
    for i in 0..heads {
        let ci = partition.sizes()[i];
        let qi = qp.slice_rows(offsets[i], ci)?;
        let ki = kp.slice_rows(offsets[i], ci)?;
        let vi = vp.slice_rows(offsets[i], ci)?;

        let head_inter = inter.map(|(cache, mods)| (cache, &mods[i]));
        let eval = attention_head(&qi, &ki, &vi, &params.temperature[i], head_inter)?;
        att_maps.push(eval.f_att.detach());
        post_softmax.push(eval.soft.detach());
        head_outs.push(eval.out);
        heads_qk.push((eval.q_norm, eval.k_norm));
    }

    let merged = concat_rows(&head_outs)?;
    let restored = merged.gather_rows(perm.inverse_index())?;
    let out = restored
        .reshape(vec![c, h, w])?
        .conv2d(&params.out_w, 1, 0, 1)?
        .add_bias_per_row(&params.out_b)?;

    Ok(HmhaOutput { out, heads_qk, att_maps, post_softmax })
}
