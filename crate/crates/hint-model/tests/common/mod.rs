#![allow(dead_code)]

use hint_core::rng::seeded_rng;
use hint_core::{Scalar, Tensor};
use rand::Rng;

/// Deterministic uniform tensor in [lo, hi), f64 draws cast to T.
pub fn rand_tensor<T: Scalar>(shape: &[usize], lo: f64, hi: f64, tag: &str) -> Tensor<T> {
    let mut rng = seeded_rng(0xC0FFEE, tag, 0);
    let n: usize = shape.iter().product();
    let data: Vec<T> = (0..n).map(|_| T::from_f64(rng.gen_range(lo..hi))).collect();
    Tensor::from_vec(shape.to_vec(), data).unwrap()
}

pub fn rand_vec(n: usize, lo: f64, hi: f64, tag: &str) -> Vec<f64> {
    let mut rng = seeded_rng(0xC0FFEE, tag, 1);
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Overwrites a tensor with fresh uniform values (breaks identity
/// initializations so oracles see a generic operating point).
pub fn scramble<T: Scalar>(t: &Tensor<T>, lo: f64, hi: f64, tag: &str) {
    let mut rng = seeded_rng(0xBADCAB, tag, 2);
    t.modify(|d| {
        for v in d.iter_mut() {
            *v = T::from_f64(rng.gen_range(lo..hi));
        }
    });
}

pub fn max_abs_diff<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.data()
        .iter()
        .zip(b.data().iter())
        .map(|(x, y)| (x.to_f64() - y.to_f64()).abs())
        .fold(0.0, f64::max)
}

/// Independent GELU for oracles: x·Φ(x) via the error function.
pub fn gelu_ref(x: f64) -> f64 {
    x * 0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

/// Align-corners bilinear resize, written with plain index loops.
pub fn bilinear_ref(src: &[f64], sr: usize, sc: usize, dr: usize, dc: usize) -> Vec<f64> {
    let pick = |n_src: usize, n_dst: usize, j: usize| -> (usize, usize, f64) {
        if n_dst == 1 || n_src == 1 {
            return (0, 0, 0.0);
        }
        let pos = j as f64 * (n_src - 1) as f64 / (n_dst - 1) as f64;
        let i0 = (pos.floor() as usize).min(n_src - 2);
        (i0, i0 + 1, pos - i0 as f64)
    };
    let mut out = vec![0.0; dr * dc];
    for r in 0..dr {
        let (r0, r1, fr) = pick(sr, dr, r);
        for c in 0..dc {
            let (c0, c1, fc) = pick(sc, dc, c);
            let top = src[r0 * sc + c0] * (1.0 - fc) + src[r0 * sc + c1] * fc;
            let bot = src[r1 * sc + c0] * (1.0 - fc) + src[r1 * sc + c1] * fc;
            out[r * dc + c] = top * (1.0 - fr) + bot * fr;
        }
    }
    out
}

/// Plain-loop grouped cross-correlation, stride 1, zero padding.
pub fn conv_ref(
    x: &[f64],
    cin: usize,
    h: usize,
    w: usize,
    kernel: &[f64],
    cout: usize,
    k: usize,
    pad: usize,
    groups: usize,
    bias: &[f64],
) -> Vec<f64> {
    let cin_g = cin / groups;
    let cout_g = cout / groups;
    let oh = h + 2 * pad - k + 1;
    let ow = w + 2 * pad - k + 1;
    let mut out = vec![0.0; cout * oh * ow];
    for co in 0..cout {
        let g = co / cout_g;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = bias[co];
                for ci in 0..cin_g {
                    for ky in 0..k {
                        for kx in 0..k {
                            let iy = oy + ky;
                            let ix = ox + kx;
                            if iy < pad || ix < pad || iy - pad >= h || ix - pad >= w {
                                continue;
                            }
                            let xv = x[(g * cin_g + ci) * h * w + (iy - pad) * w + (ix - pad)];
                            let kv = kernel[co * cin_g * k * k + ci * k * k + ky * k + kx];
                            acc += xv * kv;
                        }
                    }
                }
                out[co * oh * ow + oy * ow + ox] = acc;
            }
        }
    }
    out
}
