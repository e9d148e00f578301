//! Compute kernels behind the tensor ops.
//!
//! Every kernel gives each output element a fixed sequential reduction
//! order, so the parallel dispatchers (rayon over disjoint output slices)
//! return results bitwise identical to the sequential fallback for any
//! thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::scalar::Scalar;

/// Multiply-accumulate count below which parallel dispatch is not worth the
/// scheduling overhead.
#[cfg(feature = "parallel")]
const PAR_MIN_WORK: usize = 1 << 15;

#[inline]
fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

/// Fixed-order 4-way unrolled dot product.
#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let c = n / 4 * 4;
    let (mut s0, mut s1, mut s2, mut s3) = (T::ZERO, T::ZERO, T::ZERO, T::ZERO);
    let mut j = 0;
    while j < c {
        s0 += a[j] * b[j];
        s1 += a[j + 1] * b[j + 1];
        s2 += a[j + 2] * b[j + 2];
        s3 += a[j + 3] * b[j + 3];
        j += 4;
    }
    let mut s = (s0 + s1) + (s2 + s3);
    while j < n {
        s += a[j] * b[j];
        j += 1;
    }
    s
}

// ---------------------------------------------------------------------------
// Matrix multiplication
// ---------------------------------------------------------------------------

fn matmul_nn_row<T: Scalar>(a_row: &[T], b: &[T], out_row: &mut [T], k: usize, n: usize) {
    out_row.fill(T::ZERO);
    for kk in 0..k {
        axpy(a_row[kk], &b[kk * n..(kk + 1) * n], out_row);
    }
}

/// `out[m x n] = a[m x k] * b[k x n]`
pub fn matmul_nn_seq<T: Scalar>(a: &[T], b: &[T], out: &mut [T], m: usize, k: usize, n: usize) {
    for i in 0..m {
        matmul_nn_row(&a[i * k..(i + 1) * k], b, &mut out[i * n..(i + 1) * n], k, n);
    }
}

#[cfg(feature = "parallel")]
pub fn matmul_nn_par<T: Scalar>(a: &[T], b: &[T], out: &mut [T], m: usize, k: usize, n: usize) {
    debug_assert_eq!(out.len(), m * n);
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        matmul_nn_row(&a[i * k..(i + 1) * k], b, row, k, n);
    });
}

pub fn matmul_nn<T: Scalar>(a: &[T], b: &[T], out: &mut [T], m: usize, k: usize, n: usize) {
    #[cfg(feature = "parallel")]
    if m * k * n >= PAR_MIN_WORK {
        return matmul_nn_par(a, b, out, m, k, n);
    }
    matmul_nn_seq(a, b, out, m, k, n)
}

fn matmul_nt_row<T: Scalar>(a_row: &[T], b: &[T], out_row: &mut [T], k: usize) {
    for (j, o) in out_row.iter_mut().enumerate() {
        *o = dot(a_row, &b[j * k..(j + 1) * k]);
    }
}

/// `out[m x n] = a[m x k] * b[n x k]^T`
pub fn matmul_nt_seq<T: Scalar>(a: &[T], b: &[T], out: &mut [T], m: usize, k: usize, n: usize) {
    for i in 0..m {
        matmul_nt_row(&a[i * k..(i + 1) * k], b, &mut out[i * n..(i + 1) * n], k);
    }
}

#[cfg(feature = "parallel")]
pub fn matmul_nt_par<T: Scalar>(a: &[T], b: &[T], out: &mut [T], m: usize, k: usize, n: usize) {
    debug_assert_eq!(out.len(), m * n);
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        matmul_nt_row(&a[i * k..(i + 1) * k], b, row, k);
    });
}

pub fn matmul_nt<T: Scalar>(a: &[T], b: &[T], out: &mut [T], m: usize, k: usize, n: usize) {
    #[cfg(feature = "parallel")]
    if m * k * n >= PAR_MIN_WORK {
        return matmul_nt_par(a, b, out, m, k, n);
    }
    matmul_nt_seq(a, b, out, m, k, n)
}

fn matmul_tn_row<T: Scalar>(a: &[T], b: &[T], out_row: &mut [T], kk: usize, m: usize, k: usize, n: usize) {
    out_row.fill(T::ZERO);
    for i in 0..m {
        axpy(a[i * k + kk], &b[i * n..(i + 1) * n], out_row);
    }
}

/// `out[k x n] = a[m x k]^T * b[m x n]`
pub fn matmul_tn_seq<T: Scalar>(a: &[T], b: &[T], out: &mut [T], m: usize, k: usize, n: usize) {
    for kk in 0..k {
        matmul_tn_row(a, b, &mut out[kk * n..(kk + 1) * n], kk, m, k, n);
    }
}

#[cfg(feature = "parallel")]
pub fn matmul_tn_par<T: Scalar>(a: &[T], b: &[T], out: &mut [T], m: usize, k: usize, n: usize) {
    out.par_chunks_mut(n).enumerate().for_each(|(kk, row)| {
        matmul_tn_row(a, b, row, kk, m, k, n);
    });
}

pub fn matmul_tn<T: Scalar>(a: &[T], b: &[T], out: &mut [T], m: usize, k: usize, n: usize) {
    #[cfg(feature = "parallel")]
    if m * k * n >= PAR_MIN_WORK {
        return matmul_tn_par(a, b, out, m, k, n);
    }
    matmul_tn_seq(a, b, out, m, k, n)
}

// ---------------------------------------------------------------------------
// 2D cross-correlation (convolution in the deep-learning convention)
// ---------------------------------------------------------------------------

/// Geometry of a grouped 2D cross-correlation over `[C, H, W]` data.
#[derive(Debug, Clone, Copy)]
pub struct ConvGeom {
    pub cin: usize,
    pub h: usize,
    pub w: usize,
    pub cout: usize,
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub pad: usize,
    pub groups: usize,
}

impl ConvGeom {
    pub fn out_h(&self) -> usize {
        (self.h + 2 * self.pad - self.kh) / self.stride + 1
    }
    pub fn out_w(&self) -> usize {
        (self.w + 2 * self.pad - self.kw) / self.stride + 1
    }
    fn cin_per_group(&self) -> usize {
        self.cin / self.groups
    }
    fn cout_per_group(&self) -> usize {
        self.cout / self.groups
    }
    #[cfg(feature = "parallel")]
    fn work(&self) -> usize {
        self.cout * self.out_h() * self.out_w() * self.cin_per_group() * self.kh * self.kw
    }
}

/// Valid output-column range for a kernel column at stride 1.
#[inline]
fn col_range(kx: usize, pad: usize, w: usize, ow: usize) -> (usize, usize) {
    let lo = pad.saturating_sub(kx);
    let hi = (w + pad).saturating_sub(kx).min(ow);
    (lo, hi.max(lo))
}

fn conv_fwd_one_cout<T: Scalar>(x: &[T], w: &[T], out_c: &mut [T], g: &ConvGeom, co: usize) {
    let (oh, ow) = (g.out_h(), g.out_w());
    let (cin_g, cout_g) = (g.cin_per_group(), g.cout_per_group());
    let gi = co / cout_g;
    out_c.fill(T::ZERO);
    for cil in 0..cin_g {
        let ci = gi * cin_g + cil;
        let xc = &x[ci * g.h * g.w..(ci + 1) * g.h * g.w];
        for ky in 0..g.kh {
            for kx in 0..g.kw {
                let wv = w[((co * cin_g + cil) * g.kh + ky) * g.kw + kx];
                if g.stride == 1 {
                    let (oy_lo, oy_hi) = col_range(ky, g.pad, g.h, oh);
                    let (ox_lo, ox_hi) = col_range(kx, g.pad, g.w, ow);
                    if ox_lo >= ox_hi {
                        continue;
                    }
                    let len = ox_hi - ox_lo;
                    let ix_lo = ox_lo + kx - g.pad;
                    for oy in oy_lo..oy_hi {
                        let iy = oy + ky - g.pad;
                        let xrow = &xc[iy * g.w + ix_lo..iy * g.w + ix_lo + len];
                        axpy(wv, xrow, &mut out_c[oy * ow + ox_lo..oy * ow + ox_lo + len]);
                    }
                } else {
                    for oy in 0..oh {
                        let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                        if iy < 0 || iy >= g.h as isize {
                            continue;
                        }
                        for ox in 0..ow {
                            let ix = (ox * g.stride + kx) as isize - g.pad as isize;
                            if ix < 0 || ix >= g.w as isize {
                                continue;
                            }
                            out_c[oy * ow + ox] += wv * xc[iy as usize * g.w + ix as usize];
                        }
                    }
                }
            }
        }
    }
}

pub fn conv2d_fwd_seq<T: Scalar>(x: &[T], w: &[T], out: &mut [T], g: &ConvGeom) {
    let plane = g.out_h() * g.out_w();
    for co in 0..g.cout {
        conv_fwd_one_cout(x, w, &mut out[co * plane..(co + 1) * plane], g, co);
    }
}

#[cfg(feature = "parallel")]
pub fn conv2d_fwd_par<T: Scalar>(x: &[T], w: &[T], out: &mut [T], g: &ConvGeom) {
    let plane = g.out_h() * g.out_w();
    out.par_chunks_mut(plane).enumerate().for_each(|(co, out_c)| {
        conv_fwd_one_cout(x, w, out_c, g, co);
    });
}

pub fn conv2d_fwd<T: Scalar>(x: &[T], w: &[T], out: &mut [T], g: &ConvGeom) {
    #[cfg(feature = "parallel")]
    if g.work() >= PAR_MIN_WORK {
        return conv2d_fwd_par(x, w, out, g);
    }
    conv2d_fwd_seq(x, w, out, g)
}

fn conv_bwd_input_one_ci<T: Scalar>(w: &[T], gout: &[T], gx_c: &mut [T], g: &ConvGeom, ci: usize) {
    let (oh, ow) = (g.out_h(), g.out_w());
    let (cin_g, cout_g) = (g.cin_per_group(), g.cout_per_group());
    let gi = ci / cin_g;
    let cil = ci % cin_g;
    gx_c.fill(T::ZERO);
    for co in gi * cout_g..(gi + 1) * cout_g {
        let gc = &gout[co * oh * ow..(co + 1) * oh * ow];
        for ky in 0..g.kh {
            for kx in 0..g.kw {
                let wv = w[((co * cin_g + cil) * g.kh + ky) * g.kw + kx];
                if g.stride == 1 {
                    let (oy_lo, oy_hi) = col_range(ky, g.pad, g.h, oh);
                    let (ox_lo, ox_hi) = col_range(kx, g.pad, g.w, ow);
                    if ox_lo >= ox_hi {
                        continue;
                    }
                    let len = ox_hi - ox_lo;
                    let ix_lo = ox_lo + kx - g.pad;
                    for oy in oy_lo..oy_hi {
                        let iy = oy + ky - g.pad;
                        let grow = &gc[oy * ow + ox_lo..oy * ow + ox_lo + len];
                        axpy(wv, grow, &mut gx_c[iy * g.w + ix_lo..iy * g.w + ix_lo + len]);
                    }
                } else {
                    for oy in 0..oh {
                        let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                        if iy < 0 || iy >= g.h as isize {
                            continue;
                        }
                        for ox in 0..ow {
                            let ix = (ox * g.stride + kx) as isize - g.pad as isize;
                            if ix < 0 || ix >= g.w as isize {
                                continue;
                            }
                            gx_c[iy as usize * g.w + ix as usize] += wv * gc[oy * ow + ox];
                        }
                    }
                }
            }
        }
    }
}

pub fn conv2d_bwd_input_seq<T: Scalar>(w: &[T], gout: &[T], gx: &mut [T], g: &ConvGeom) {
    let plane = g.h * g.w;
    for ci in 0..g.cin {
        conv_bwd_input_one_ci(w, gout, &mut gx[ci * plane..(ci + 1) * plane], g, ci);
    }
}

#[cfg(feature = "parallel")]
pub fn conv2d_bwd_input_par<T: Scalar>(w: &[T], gout: &[T], gx: &mut [T], g: &ConvGeom) {
    let plane = g.h * g.w;
    gx.par_chunks_mut(plane).enumerate().for_each(|(ci, gx_c)| {
        conv_bwd_input_one_ci(w, gout, gx_c, g, ci);
    });
}

pub fn conv2d_bwd_input<T: Scalar>(w: &[T], gout: &[T], gx: &mut [T], g: &ConvGeom) {
    #[cfg(feature = "parallel")]
    if g.work() >= PAR_MIN_WORK {
        return conv2d_bwd_input_par(w, gout, gx, g);
    }
    conv2d_bwd_input_seq(w, gout, gx, g)
}

fn conv_bwd_kernel_one_cout<T: Scalar>(x: &[T], gout: &[T], gw_c: &mut [T], g: &ConvGeom, co: usize) {
    let (oh, ow) = (g.out_h(), g.out_w());
    let (cin_g, cout_g) = (g.cin_per_group(), g.cout_per_group());
    let gi = co / cout_g;
    let gc = &gout[co * oh * ow..(co + 1) * oh * ow];
    for cil in 0..cin_g {
        let ci = gi * cin_g + cil;
        let xc = &x[ci * g.h * g.w..(ci + 1) * g.h * g.w];
        for ky in 0..g.kh {
            for kx in 0..g.kw {
                let mut acc = T::ZERO;
                if g.stride == 1 {
                    let (oy_lo, oy_hi) = col_range(ky, g.pad, g.h, oh);
                    let (ox_lo, ox_hi) = col_range(kx, g.pad, g.w, ow);
                    if ox_lo < ox_hi {
                        let len = ox_hi - ox_lo;
                        let ix_lo = ox_lo + kx - g.pad;
                        for oy in oy_lo..oy_hi {
                            let iy = oy + ky - g.pad;
                            acc += dot(
                                &gc[oy * ow + ox_lo..oy * ow + ox_lo + len],
                                &xc[iy * g.w + ix_lo..iy * g.w + ix_lo + len],
                            );
                        }
                    }
                } else {
                    for oy in 0..oh {
                        let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                        if iy < 0 || iy >= g.h as isize {
                            continue;
                        }
                        for ox in 0..ow {
                            let ix = (ox * g.stride + kx) as isize - g.pad as isize;
                            if ix < 0 || ix >= g.w as isize {
                                continue;
                            }
                            acc += gc[oy * ow + ox] * xc[iy as usize * g.w + ix as usize];
                        }
                    }
                }
                gw_c[(cil * g.kh + ky) * g.kw + kx] = acc;
            }
        }
    }
}

pub fn conv2d_bwd_kernel_seq<T: Scalar>(x: &[T], gout: &[T], gw: &mut [T], g: &ConvGeom) {
    let per_cout = g.cin_per_group() * g.kh * g.kw;
    for co in 0..g.cout {
        conv_bwd_kernel_one_cout(x, gout, &mut gw[co * per_cout..(co + 1) * per_cout], g, co);
    }
}

#[cfg(feature = "parallel")]
pub fn conv2d_bwd_kernel_par<T: Scalar>(x: &[T], gout: &[T], gw: &mut [T], g: &ConvGeom) {
    let per_cout = g.cin_per_group() * g.kh * g.kw;
    gw.par_chunks_mut(per_cout).enumerate().for_each(|(co, gw_c)| {
        conv_bwd_kernel_one_cout(x, gout, gw_c, g, co);
    });
}

pub fn conv2d_bwd_kernel<T: Scalar>(x: &[T], gout: &[T], gw: &mut [T], g: &ConvGeom) {
    #[cfg(feature = "parallel")]
    if g.work() >= PAR_MIN_WORK {
        return conv2d_bwd_kernel_par(x, gout, gw, g);
    }
    conv2d_bwd_kernel_seq(x, gout, gw, g)
}

// ---------------------------------------------------------------------------
// Bilinear resize (align-corners convention)
// ---------------------------------------------------------------------------

/// Source coordinate and interpolation weight for each destination index.
/// With `src == dst` every weight is 0 on an exact integer coordinate, so the
/// resize is an exact identity.
pub fn resize_axis(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    (0..dst)
        .map(|j| {
            if dst == 1 || src == 1 {
                return (0, 0, 0.0);
            }
            let pos = j as f64 * (src - 1) as f64 / (dst - 1) as f64;
            let i0 = pos.floor() as usize;
            let i0 = i0.min(src - 2);
            (i0, i0 + 1, pos - i0 as f64)
        })
        .collect()
}

/// `out[dr x dc] = bilinear(x[sr x sc])`, align-corners.
pub fn bilinear_resize<T: Scalar>(x: &[T], sr: usize, sc: usize, out: &mut [T], dr: usize, dc: usize) {
    let rows = resize_axis(sr, dr);
    let cols = resize_axis(sc, dc);
    for (r, &(r0, r1, fr)) in rows.iter().enumerate() {
        let fr = T::from_f64(fr);
        for (c, &(c0, c1, fc)) in cols.iter().enumerate() {
            let fc = T::from_f64(fc);
            let v00 = x[r0 * sc + c0];
            let v01 = x[r0 * sc + c1];
            let v10 = x[r1 * sc + c0];
            let v11 = x[r1 * sc + c1];
            let top = v00 * (T::ONE - fc) + v01 * fc;
            let bot = v10 * (T::ONE - fc) + v11 * fc;
            out[r * dc + c] = top * (T::ONE - fr) + bot * fr;
        }
    }
}

/// Scatter-transpose of [`bilinear_resize`]: accumulates `gout` into `gx`.
pub fn bilinear_resize_bwd<T: Scalar>(gout: &[T], dr: usize, dc: usize, gx: &mut [T], sr: usize, sc: usize) {
    let rows = resize_axis(sr, dr);
    let cols = resize_axis(sc, dc);
    for (r, &(r0, r1, fr)) in rows.iter().enumerate() {
        let fr = T::from_f64(fr);
        for (c, &(c0, c1, fc)) in cols.iter().enumerate() {
            let fc = T::from_f64(fc);
            let g = gout[r * dc + c];
            gx[r0 * sc + c0] += g * (T::ONE - fr) * (T::ONE - fc);
            gx[r0 * sc + c1] += g * (T::ONE - fr) * fc;
            gx[r1 * sc + c0] += g * fr * (T::ONE - fc);
            gx[r1 * sc + c1] += g * fr * fc;
        }
    }
}
