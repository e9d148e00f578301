//! Query-key cache modulation.
//!
//! Two mechanisms let attention heads exchange information:
//! within a block, the summed query/key features gate the attention
//! output (intra); across blocks, an exponential moving average of
//! score maps rescales later blocks' scores before softmax (inter).

use hint_core::ops::concat_rows;
use hint_core::{kernels, CoreError, ParamBuilder, Result, Scalar, Tensor};

use crate::hmha::HeadPartition;

/// Bias b for a zero-weight gate conv such that GELU(b) = 1, making
/// `GELU(gate(x)) ⊙ x` the identity at initialization. Solves
/// b·Φ(b) = 1 by Newton iteration.
pub fn gate_identity_bias() -> f64 {
    let sqrt_2pi = (2.0 * std::f64::consts::PI).sqrt();
    let mut b = 1.0f64;
    for _ in 0..64 {
        let phi_cdf = 0.5 * (1.0 + Scalar::erf(b / std::f64::consts::SQRT_2));
        let g = b * phi_cdf - 1.0;
        if g.abs() < 1e-15 {
            break;
        }
        let pdf = (-0.5 * b * b).exp() / sqrt_2pi;
        b -= g / (phi_cdf + b * pdf);
    }
    b
}

/// Gated bottleneck applied to a block's attention output (intra path).
pub struct IntraModParams<T: Scalar> {
    pub gate_w: Tensor<T>,
    pub gate_b: Tensor<T>,
    pub down_w: Tensor<T>,
    pub down_b: Tensor<T>,
    pub up_w: Tensor<T>,
    pub up_b: Tensor<T>,
    channels: usize,
}

impl<T: Scalar> IntraModParams<T> {
    pub fn build(pb: &mut ParamBuilder<T>, prefix: &str, c: usize, r: usize) -> Result<Self> {
        if r == 0 || c % r != 0 {
            return Err(CoreError::Usage(format!(
                "intra reduction {} must divide channel count {}",
                r, c
            )));
        }
        let cr = c / r;
        Ok(IntraModParams {
            gate_w: pb
                .uniform_fan_in(&format!("{prefix}.gate.weight"), vec![c, 1, 3, 3], 9)?
                .tensor()
                .clone(),
            gate_b: pb.zeros(&format!("{prefix}.gate.bias"), vec![c])?.tensor().clone(),
            down_w: pb
                .uniform_fan_in(&format!("{prefix}.down.weight"), vec![cr, c, 1, 1], c)?
                .tensor()
                .clone(),
            down_b: pb.zeros(&format!("{prefix}.down.bias"), vec![cr])?.tensor().clone(),
            up_w: pb
                .uniform_fan_in(&format!("{prefix}.up.weight"), vec![c, cr, 1, 1], cr)?
                .tensor()
                .clone(),
            up_b: pb.zeros(&format!("{prefix}.up.bias"), vec![c])?.tensor().clone(),
            channels: c,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }
}

/// Sums each head's (normalized, reranked) Q and K and concatenates the
/// results in head order. Stays in the autodiff graph.
pub fn intra_cache_build<T: Scalar>(heads_qk: &[(Tensor<T>, Tensor<T>)]) -> Result<Tensor<T>> {
    if heads_qk.is_empty() {
        return Err(CoreError::dimension("intra_cache_build", "empty head list"));
    }
    let hw = heads_qk[0].0.shape().get(1).copied().unwrap_or(0);
    let mut parts = Vec::with_capacity(heads_qk.len());
    for (q, k) in heads_qk {
        if q.shape().len() != 2 || q.shape() != k.shape() || q.shape()[1] != hw {
            return Err(CoreError::dimension(
                "intra_cache_build",
                format!("head shapes {:?} vs {:?}, expected consistent [C_i, {}]", q.shape(), k.shape(), hw),
            ));
        }
        parts.push(q.add(k)?);
    }
    concat_rows(&parts)
}

/// `Fs = cache + f_out; out = up(down(GELU(gate(Fs)) ⊙ Fs))`.
///
/// The result is the block's whole attention-branch contribution: the
/// caller adds it to the residual stream in place of the raw attention
/// output.
pub fn intra_modulate<T: Scalar>(
    cache: &Tensor<T>,
    f_out: &Tensor<T>,
    params: &IntraModParams<T>,
) -> Result<Tensor<T>> {
    let fs = f_out.shape();
    if fs.len() != 3 {
        return Err(CoreError::dimension("intra_modulate", format!("f_out must be [C,H,W], got {:?}", fs)));
    }
    let (c, h, w) = (fs[0], fs[1], fs[2]);
    if cache.numel() != c * h * w || cache.shape()[0] != c || c != params.channels {
        return Err(CoreError::dimension(
            "intra_modulate",
            format!("cache {:?} vs feature [{},{},{}] ({} param channels)", cache.shape(), c, h, w, params.channels),
        ));
    }
    let cache3 = cache.reshape(vec![c, h, w])?;
    let fs = cache3.add(f_out)?;
    let gate = fs.conv2d(&params.gate_w, 1, 1, c)?.add_bias_per_row(&params.gate_b)?;
    let gated = gate.gelu().mul(&fs)?;
    let down = gated.conv2d(&params.down_w, 1, 0, 1)?.add_bias_per_row(&params.down_b)?;
    down.conv2d(&params.up_w, 1, 0, 1)?.add_bias_per_row(&params.up_b)
}

/// EMA of layer score maps at a fixed [C'×C'] resolution.
///
/// Owned by one forward pass: zeroed at entry, updated after each
/// attention block in execution order, never part of the autodiff graph.
pub struct InterCache<T: Scalar> {
    map: Tensor<T>,
    side: usize,
    alpha: f64,
    updates: usize,
}

impl<T: Scalar> InterCache<T> {
    pub fn new(side: usize, alpha: f64) -> Self {
        InterCache { map: Tensor::zeros(vec![side, side]), side, alpha, updates: 0 }
    }

    pub fn map(&self) -> &Tensor<T> {
        &self.map
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Number of EMA updates since construction or the last reset.
    pub fn updates(&self) -> usize {
        self.updates
    }

    pub fn reset(&mut self) {
        self.map = Tensor::zeros(vec![self.side, self.side]);
        self.updates = 0;
    }

    /// `map ← α·map + (1−α)·layer_map`.
    pub fn update(&mut self, layer_map: &Tensor<T>) -> Result<()> {
        if layer_map.shape() != self.map.shape() {
            return Err(CoreError::dimension(
                "inter_cache_update",
                format!("layer map {:?} vs cache {:?}", layer_map.shape(), self.map.shape()),
            ));
        }
        let a = T::from_f64(self.alpha);
        let b = T::from_f64(1.0 - self.alpha);
        let old = self.map.to_vec();
        let new = layer_map.to_vec();
        let mixed: Vec<T> = old.iter().zip(&new).map(|(o, n)| a * *o + b * *n).collect();
        self.map = Tensor::from_vec(vec![self.side, self.side], mixed)?;
        self.updates += 1;
        Ok(())
    }
}

/// Per-head scale/shift/gate parameters of the inter path.
///
/// Initialized to an exact identity: zero projection weights, scale bias
/// 1, shift bias 0, zero gate weights with bias solving GELU(b) = 1.
pub struct InterModParams<T: Scalar> {
    pub scale_w: Tensor<T>,
    pub scale_b: Tensor<T>,
    pub shift_w: Tensor<T>,
    pub shift_b: Tensor<T>,
    pub gate_w: Tensor<T>,
    pub gate_b: Tensor<T>,
    side: usize,
}

impl<T: Scalar> InterModParams<T> {
    pub fn build(pb: &mut ParamBuilder<T>, prefix: &str, ci: usize) -> Result<Self> {
        Ok(InterModParams {
            scale_w: pb.zeros(&format!("{prefix}.scale.weight"), vec![ci, ci])?.tensor().clone(),
            scale_b: pb.constant(&format!("{prefix}.scale.bias"), vec![ci], 1.0)?.tensor().clone(),
            shift_w: pb.zeros(&format!("{prefix}.shift.weight"), vec![ci, ci])?.tensor().clone(),
            shift_b: pb.zeros(&format!("{prefix}.shift.bias"), vec![ci])?.tensor().clone(),
            gate_w: pb.zeros(&format!("{prefix}.gate.weight"), vec![1, 1, 3, 3])?.tensor().clone(),
            gate_b: pb
                .constant(&format!("{prefix}.gate.bias"), vec![1], gate_identity_bias())?
                .tensor()
                .clone(),
            side: ci,
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }
}

/// Modulates one head's pre-softmax score map with the cache:
/// `F̂ = resize(cache); Fs = f_att + F̂; F_m = (W_s·Fs + b_s) ⊙ f_att +
/// (W_t·Fs + b_t); out = GELU(gate(F_m)) ⊙ F_m`. The caller applies
/// softmax afterwards. The cache enters as a constant.
pub fn inter_modulate<T: Scalar>(
    cache: &InterCache<T>,
    f_att: &Tensor<T>,
    params: &InterModParams<T>,
) -> Result<Tensor<T>> {
    let s = f_att.shape();
    if s.len() != 2 || s[0] != s[1] {
        return Err(CoreError::dimension("inter_modulate", format!("score map must be square, got {:?}", s)));
    }
    let ci = s[0];
    if ci != params.side {
        return Err(CoreError::dimension(
            "inter_modulate",
            format!("score map side {} vs param side {}", ci, params.side),
        ));
    }
    let mut resized = vec![T::ZERO; ci * ci];
    kernels::bilinear_resize(&cache.map().data(), cache.side(), cache.side(), &mut resized, ci, ci);
    let f_hat = Tensor::from_vec(vec![ci, ci], resized)?;

    let fs = f_att.add(&f_hat)?;
    let f_scale = params.scale_w.matmul(&fs)?.add_bias_per_row(&params.scale_b)?;
    let f_shift = params.shift_w.matmul(&fs)?.add_bias_per_row(&params.shift_b)?;
    let f_m = f_scale.mul(f_att)?.add(&f_shift)?;

    let gate = f_m
        .reshape(vec![1, ci, ci])?
        .conv2d(&params.gate_w, 1, 1, 1)?
        .add_bias_per_row(&params.gate_b)?
        .gelu()
        .reshape(vec![ci, ci])?;
    gate.mul(&f_m)
}

/// Collapses one block's per-head modulated score maps to the cache
/// resolution: `Σ_i resize(map_i → C'×C') · (C_i / C)`.
pub fn inter_cache_layer<T: Scalar>(
    att_maps: &[Tensor<T>],
    partition: &HeadPartition,
    c_prime: usize,
) -> Result<Tensor<T>> {
    if att_maps.len() != partition.heads() {
        return Err(CoreError::dimension(
            "inter_cache_layer",
            format!("{} maps for {} heads", att_maps.len(), partition.heads()),
        ));
    }
    let c_total = partition.channels();
    let mut acc = vec![T::ZERO; c_prime * c_prime];
    let mut resized = vec![T::ZERO; c_prime * c_prime];
    for (map, &ci) in att_maps.iter().zip(partition.sizes()) {
        if map.shape() != [ci, ci] {
            return Err(CoreError::dimension(
                "inter_cache_layer",
                format!("head map {:?} vs partition size {}", map.shape(), ci),
            ));
        }
        kernels::bilinear_resize(&map.data(), ci, ci, &mut resized, c_prime, c_prime);
        let w = T::from_f64(ci as f64 / c_total as f64);
        for (a, r) in acc.iter_mut().zip(&resized) {
            *a += w * *r;
        }
    }
    Tensor::from_vec(vec![c_prime, c_prime], acc)
}
