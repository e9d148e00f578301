//! Analytic cost model: parameter count and forward FLOPs for a config
//! at a given input size, mirroring the exact layer structure the
//! builder produces. Multiply-accumulates count as 2 FLOPs.

use crate::config::ModelConfig;
use crate::hmha::hierarchical_partition;

/// Flat cost of one GELU evaluation (erf-based).
const GELU: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostReport {
    pub params: usize,
    pub flops: f64,
}

fn conv(params: &mut usize, flops: &mut f64, cout: usize, cin: usize, k: usize, groups: usize, hw: usize) {
    let kernel = cout * (cin / groups) * k * k;
    *params += kernel + cout;
    *flops += (2 * kernel + cout) as f64 * hw as f64;
}

fn layer_norm(params: &mut usize, flops: &mut f64, c: usize, hw: usize) {
    *params += 2 * c;
    *flops += 8.0 * (c * hw) as f64;
}

fn ffn(params: &mut usize, flops: &mut f64, c: usize, expansion: f64, hw: usize) {
    let h = ((c as f64) * expansion).floor() as usize;
    conv(params, flops, 2 * h, c, 1, 1, hw);
    conv(params, flops, 2 * h, 2 * h, 3, 2 * h, hw);
    *flops += (GELU + 1.0) * (h * hw) as f64;
    conv(params, flops, c, h, 1, 1, hw);
}

fn attention_block(params: &mut usize, flops: &mut f64, cfg: &ModelConfig, c: usize, hw: usize) {
    let cp = cfg.base_channels;
    let partition = hierarchical_partition(c, &cfg.head_ratio).expect("validated config");

    layer_norm(params, flops, c, hw);
    // QKV projection.
    conv(params, flops, 3 * c, c, 1, 1, hw);
    conv(params, flops, 3 * c, 3 * c, 3, 3 * c, hw);
    // Rerank scoring: mean channel + per-channel correlation.
    *flops += 7.0 * (c * hw) as f64;

    for &ci in partition.sizes() {
        *params += 1; // temperature
        // L2 row normalization of Q and K.
        *flops += 6.0 * (ci * hw) as f64;
        // Scores, temperature, softmax, score·V.
        *flops += 2.0 * (ci * ci * hw) as f64;
        *flops += (ci * ci) as f64;
        *flops += 5.0 * (ci * ci) as f64;
        *flops += 2.0 * (ci * ci * hw) as f64;
        if cfg.use_inter {
            // scale/shift affine maps.
            *params += 2 * (ci * ci + ci);
            *flops += 2.0 * (2 * ci * ci * ci + ci * ci) as f64;
            // Resize cache in, blend F_m, gate conv + GELU + mul.
            *flops += 8.0 * (ci * ci) as f64;
            *flops += 2.0 * (ci * ci) as f64;
            *params += 9 + 1;
            *flops += (2.0 * 9.0 + 1.0 + GELU + 1.0) * (ci * ci) as f64;
            // Resize map out + EMA share.
            *flops += 10.0 * (cp * cp) as f64;
        }
    }
    if cfg.use_inter {
        *flops += 3.0 * (cp * cp) as f64; // EMA update
    }
    conv(params, flops, c, c, 1, 1, hw); // out projection

    if cfg.use_intra {
        let r = cfg.intra_reduction;
        *flops += 2.0 * (c * hw) as f64; // cache build + add
        conv(params, flops, c, c, 3, c, hw); // gate
        *flops += (GELU + 1.0) * (c * hw) as f64;
        conv(params, flops, c / r, c, 1, 1, hw);
        conv(params, flops, c, c / r, 1, 1, hw);
    }
    *flops += (c * hw) as f64; // attention residual

    layer_norm(params, flops, c, hw);
    ffn(params, flops, c, cfg.ffn_expansion, hw);
    *flops += (c * hw) as f64; // FFN residual
}

/// Cost of one forward pass on a [3×H×W] input.
pub fn cost(cfg: &ModelConfig, h: usize, w: usize) -> CostReport {
    let mut params = 0usize;
    let mut flops = 0.0f64;
    let n1 = cfg.levels;

    conv(&mut params, &mut flops, cfg.base_channels, 3, 3, 1, h * w);

    for l in 1..n1 {
        let c = cfg.level_channels(l);
        let hw = (h >> (l - 1)) * (w >> (l - 1));
        for _ in 0..cfg.blocks_per_level[l - 1] {
            layer_norm(&mut params, &mut flops, c, hw);
            ffn(&mut params, &mut flops, c, cfg.ffn_expansion, hw);
            flops += (c * hw) as f64;
        }
        conv(&mut params, &mut flops, c / 2, c, 3, 1, hw); // downsample
    }

    let cb = cfg.level_channels(n1);
    let hwb = (h >> (n1 - 1)) * (w >> (n1 - 1));
    for _ in 0..cfg.blocks_per_level[n1 - 1] {
        attention_block(&mut params, &mut flops, cfg, cb, hwb);
    }

    for l in (1..n1).rev() {
        let c = cfg.level_channels(l);
        let hw = (h >> (l - 1)) * (w >> (l - 1));
        conv(&mut params, &mut flops, 4 * c, 2 * c, 1, 1, hw / 4); // upsample conv at source res
        conv(&mut params, &mut flops, c, 2 * c, 1, 1, hw); // skip fusion
        for _ in 0..cfg.blocks_per_level[l - 1] {
            attention_block(&mut params, &mut flops, cfg, c, hw);
        }
    }

    let c1 = cfg.level_channels(1);
    for _ in 0..cfg.refinement_blocks {
        attention_block(&mut params, &mut flops, cfg, c1, h * w);
    }

    conv(&mut params, &mut flops, 3, c1, 3, 1, h * w);
    flops += (3 * h * w) as f64; // residual add

    CostReport { params, flops }
}
