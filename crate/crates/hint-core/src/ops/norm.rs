//! Softmax, layer normalization, and row L2 normalization.

use super::{dim_err, expect_2d};
use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Default epsilon inside the layer-norm variance square root.
pub const LAYER_NORM_EPS: f64 = 1e-6;
/// Epsilon added under the square root of row L2 norms.
pub const L2_NORM_EPS: f64 = 1e-12;

impl<T: Scalar> Tensor<T> {
    /// Numerically stable softmax along `axis`. Errors on non-finite input.
    pub fn softmax(&self, axis: usize) -> Result<Tensor<T>> {
        let shape = self.shape().to_vec();
        if axis >= shape.len() {
            return Err(dim_err("softmax", format!("axis {} out of range for {:?}", axis, shape)));
        }
        {
            let d = self.data();
            if d.iter().any(|v| !v.is_finite()) {
                return Err(CoreError::numeric("softmax", "non-finite input".to_string()));
            }
        }
        let len = shape[axis];
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let mut out = self.to_vec();
        for o in 0..outer {
            for i in 0..inner {
                let base = o * len * inner + i;
                let mut mx = out[base];
                for j in 1..len {
                    let v = out[base + j * inner];
                    if v > mx {
                        mx = v;
                    }
                }
                let mut sum = T::ZERO;
                for j in 0..len {
                    let e = (out[base + j * inner] - mx).exp();
                    out[base + j * inner] = e;
                    sum += e;
                }
                for j in 0..len {
                    out[base + j * inner] /= sum;
                }
            }
        }
        Ok(Tensor::from_op(
            shape,
            out,
            vec![self.clone()],
            Box::new(move |ctx| {
                // dx = y * (g - sum(g * y)) per slice
                let y = ctx.out_data;
                let g = ctx.out_grad;
                let mut dx = vec![T::ZERO; y.len()];
                for o in 0..outer {
                    for i in 0..inner {
                        let base = o * len * inner + i;
                        let mut dot = T::ZERO;
                        for j in 0..len {
                            let idx = base + j * inner;
                            dot += g[idx] * y[idx];
                        }
                        for j in 0..len {
                            let idx = base + j * inner;
                            dx[idx] = y[idx] * (g[idx] - dot);
                        }
                    }
                }
                vec![dx]
            }),
        ))
    }

    /// Normalizes across the axis-0 extent (channels) independently at every
    /// remaining position, then applies per-channel `gain` and `bias`.
    pub fn layer_norm(&self, gain: &Tensor<T>, bias: &Tensor<T>, eps: f64) -> Result<Tensor<T>> {
        let shape = self.shape().to_vec();
        if shape.len() < 2 {
            return Err(dim_err("layer_norm", format!("need at least 2 axes, got {:?}", shape)));
        }
        let c = shape[0];
        let np = self.numel() / c;
        if gain.shape() != [c] || bias.shape() != [c] {
            return Err(dim_err(
                "layer_norm",
                format!("gain {:?} / bias {:?} vs {} channels", gain.shape(), bias.shape(), c),
            ));
        }
        let eps = T::from_f64(eps);
        let inv_c = T::ONE / T::from_f64(c as f64);

        let x = self.to_vec();
        let mut mean = vec![T::ZERO; np];
        for ch in x.chunks(np) {
            for (m, v) in mean.iter_mut().zip(ch) {
                *m += *v;
            }
        }
        for m in &mut mean {
            *m *= inv_c;
        }
        let mut var = vec![T::ZERO; np];
        for ch in x.chunks(np) {
            for ((vv, v), m) in var.iter_mut().zip(ch).zip(&mean) {
                let d = *v - *m;
                *vv += d * d;
            }
        }
        let istd: Vec<T> = var.iter().map(|v| T::ONE / (*v * inv_c + eps).sqrt()).collect();

        let mut out = vec![T::ZERO; x.len()];
        {
            let gd = gain.data();
            let bd = bias.data();
            for (ci, (och, xch)) in out.chunks_mut(np).zip(x.chunks(np)).enumerate() {
                let (g, b) = (gd[ci], bd[ci]);
                for ((o, v), (m, s)) in och.iter_mut().zip(xch).zip(mean.iter().zip(&istd)) {
                    *o = (*v - *m) * *s * g + b;
                }
            }
        }

        Ok(Tensor::from_op(
            shape,
            out,
            vec![self.clone(), gain.clone(), bias.clone()],
            Box::new(move |ctx| {
                let x = ctx.parents[0].data();
                let gd = ctx.parents[1].data();
                let g = ctx.out_grad;
                let cn = T::from_f64(c as f64);

                // Per position: s1 = sum_c g*gain, s2 = sum_c g*gain*xhat.
                let mut s1 = vec![T::ZERO; np];
                let mut s2 = vec![T::ZERO; np];
                for ci in 0..c {
                    let gain_c = gd[ci];
                    let gch = &g[ci * np..(ci + 1) * np];
                    let xch = &x[ci * np..(ci + 1) * np];
                    for p in 0..np {
                        let xhat = (xch[p] - mean[p]) * istd[p];
                        let gg = gch[p] * gain_c;
                        s1[p] += gg;
                        s2[p] += gg * xhat;
                    }
                }
                let mut dx = vec![T::ZERO; x.len()];
                let mut dgain = vec![T::ZERO; c];
                let mut dbias = vec![T::ZERO; c];
                for ci in 0..c {
                    let gain_c = gd[ci];
                    let gch = &g[ci * np..(ci + 1) * np];
                    let xch = &x[ci * np..(ci + 1) * np];
                    let dch = &mut dx[ci * np..(ci + 1) * np];
                    let (mut dg, mut db) = (T::ZERO, T::ZERO);
                    for p in 0..np {
                        let xhat = (xch[p] - mean[p]) * istd[p];
                        dch[p] = istd[p] * (gch[p] * gain_c - (s1[p] + xhat * s2[p]) / cn);
                        dg += gch[p] * xhat;
                        db += gch[p];
                    }
                    dgain[ci] = dg;
                    dbias[ci] = db;
                }
                vec![dx, dgain, dbias]
            }),
        ))
    }

    /// Scales each row of a 2D tensor to unit L2 norm.
    pub fn l2_normalize_rows(&self) -> Result<Tensor<T>> {
        let (r, n) = expect_2d("l2_normalize_rows", self.shape())?;
        let eps = T::from_f64(L2_NORM_EPS);
        let x = self.to_vec();
        let mut norms = vec![T::ZERO; r];
        let mut out = vec![T::ZERO; r * n];
        for i in 0..r {
            let row = &x[i * n..(i + 1) * n];
            let ss: T = row.iter().map(|v| *v * *v).sum();
            let nm = (ss + eps).sqrt();
            norms[i] = nm;
            for (o, v) in out[i * n..(i + 1) * n].iter_mut().zip(row) {
                *o = *v / nm;
            }
        }
        Ok(Tensor::from_op(
            vec![r, n],
            out,
            vec![self.clone()],
            Box::new(move |ctx| {
                // y = x / nm; dx = (g - y * dot(g, y) * ss/(ss+eps)) / nm.
                // With eps tiny relative to ss this is g/nm - y*dot(g,y)/nm
                // up to the eps correction, which we keep exact:
                // dL/dx = g/nm - x * dot(g, x) / nm^3.
                let x = ctx.parents[0].data();
                let g = ctx.out_grad;
                let mut dx = vec![T::ZERO; x.len()];
                for i in 0..r {
                    let xr = &x[i * n..(i + 1) * n];
                    let gr = &g[i * n..(i + 1) * n];
                    let nm = norms[i];
                    let dot: T = gr.iter().zip(xr).map(|(a, b)| *a * *b).sum();
                    let k = dot / (nm * nm * nm);
                    for ((d, gv), xv) in dx[i * n..(i + 1) * n].iter_mut().zip(gr).zip(xr) {
                        *d = *gv / nm - *xv * k;
                    }
                }
                vec![dx]
            }),
        ))
    }
}
