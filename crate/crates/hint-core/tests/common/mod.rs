//! Shared test fixtures: deterministic random tensors and an independent
//! nested-loop cross-correlation reference.
#![allow(dead_code)]

use hint_core::rng::seeded_rng;
use hint_core::Tensor;
use rand::Rng;

pub fn rand_tensor(shape: Vec<usize>, lo: f64, hi: f64, tag: &str) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    let mut rng = seeded_rng(42, tag, n as u64);
    Tensor::from_vec(shape, (0..n).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

/// Direct 7-loop grouped cross-correlation, written independently of the
/// engine's kernels. Accumulates over (ci, ky, kx) per output element.
#[allow(clippy::too_many_arguments)]
pub fn conv_reference(
    x: &[f64],
    w: &[f64],
    cin: usize,
    h: usize,
    width: usize,
    cout: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    groups: usize,
) -> Vec<f64> {
    let oh = (h + 2 * pad - kh) / stride + 1;
    let ow = (width + 2 * pad - kw) / stride + 1;
    let cin_g = cin / groups;
    let cout_g = cout / groups;
    let mut out = vec![0.0; cout * oh * ow];
    for co in 0..cout {
        let gi = co / cout_g;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = 0.0;
                for cil in 0..cin_g {
                    let ci = gi * cin_g + cil;
                    for ky in 0..kh {
                        for kx in 0..kw {
                            let iy = (oy * stride + ky) as isize - pad as isize;
                            let ix = (ox * stride + kx) as isize - pad as isize;
                            if iy >= 0 && iy < h as isize && ix >= 0 && ix < width as isize {
                                acc += w[((co * cin_g + cil) * kh + ky) * kw + kx]
                                    * x[(ci * h + iy as usize) * width + ix as usize];
                            }
                        }
                    }
                }
                out[(co * oh + oy) * ow + ox] = acc;
            }
        }
    }
    out
}
