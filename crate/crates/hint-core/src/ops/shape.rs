//! Shape manipulation: reshape, row slicing/concat/gather, pixel shuffles.

use super::{dim_err, expect_3d};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

impl<T: Scalar> Tensor<T> {
    /// Reinterprets the shape without copying; storage is aliased.
    pub fn reshape(&self, shape: Vec<usize>) -> Result<Tensor<T>> {
        let numel: usize = shape.iter().product();
        if numel != self.numel() {
            return Err(dim_err(
                "reshape",
                format!("cannot view {:?} as {:?}", self.shape(), shape),
            ));
        }
        Ok(Tensor::from_op_shared(
            shape,
            self.storage(),
            vec![self.clone()],
            Box::new(|ctx| vec![ctx.out_grad.to_vec()]),
        ))
    }

    /// Copies rows `[start, start + len)` along axis 0.
    pub fn slice_rows(&self, start: usize, len: usize) -> Result<Tensor<T>> {
        let rows = *self.shape().first().ok_or_else(|| {
            dim_err("slice_rows", "input must have at least 1 axis".to_string())
        })?;
        if start + len > rows {
            return Err(dim_err(
                "slice_rows",
                format!("rows [{start}, {}) out of {} in {:?}", start + len, rows, self.shape()),
            ));
        }
        let rs = self.numel() / rows;
        let data = self.data()[start * rs..(start + len) * rs].to_vec();
        let mut shape = self.shape().to_vec();
        shape[0] = len;
        let total = self.numel();
        Ok(Tensor::from_op(
            shape,
            data,
            vec![self.clone()],
            Box::new(move |ctx| {
                let mut dx = vec![T::ZERO; total];
                dx[start * rs..(start + len) * rs].copy_from_slice(ctx.out_grad);
                vec![dx]
            }),
        ))
    }

    /// Reorders axis-0 rows: `out[r] = self[indices[r]]`.
    pub fn gather_rows(&self, indices: &[usize]) -> Result<Tensor<T>> {
        let rows = *self.shape().first().ok_or_else(|| {
            dim_err("gather_rows", "input must have at least 1 axis".to_string())
        })?;
        if let Some(&bad) = indices.iter().find(|&&i| i >= rows) {
            return Err(dim_err(
                "gather_rows",
                format!("index {} out of {} rows", bad, rows),
            ));
        }
        let rs = self.numel() / rows;
        let src = self.data();
        let mut data = vec![T::ZERO; indices.len() * rs];
        for (r, &i) in indices.iter().enumerate() {
            data[r * rs..(r + 1) * rs].copy_from_slice(&src[i * rs..(i + 1) * rs]);
        }
        drop(src);
        let mut shape = self.shape().to_vec();
        shape[0] = indices.len();
        let idx: Vec<usize> = indices.to_vec();
        let total = self.numel();
        Ok(Tensor::from_op(
            shape,
            data,
            vec![self.clone()],
            Box::new(move |ctx| {
                let mut dx = vec![T::ZERO; total];
                for (r, &i) in idx.iter().enumerate() {
                    for (d, g) in dx[i * rs..(i + 1) * rs].iter_mut().zip(&ctx.out_grad[r * rs..(r + 1) * rs]) {
                        *d += *g;
                    }
                }
                vec![dx]
            }),
        ))
    }

    /// `[C, H, W] -> [C*r^2, H/r, W/r]`, gathering each `r x r` cell into
    /// channels. Exact inverse of [`Tensor::pixel_shuffle`].
    pub fn pixel_unshuffle(&self, r: usize) -> Result<Tensor<T>> {
        let (c, h, w) = expect_3d("pixel_unshuffle", self.shape())?;
        if r == 0 || h % r != 0 || w % r != 0 {
            return Err(dim_err(
                "pixel_unshuffle",
                format!("factor {} must divide spatial extents of {:?}", r, self.shape()),
            ));
        }
        let (oh, ow) = (h / r, w / r);
        let src = self.data();
        let mut data = vec![T::ZERO; c * h * w];
        for ci in 0..c {
            for dy in 0..r {
                for dx in 0..r {
                    let co = ci * r * r + dy * r + dx;
                    for oy in 0..oh {
                        for ox in 0..ow {
                            data[(co * oh + oy) * ow + ox] =
                                src[(ci * h + oy * r + dy) * w + ox * r + dx];
                        }
                    }
                }
            }
        }
        drop(src);
        Ok(Tensor::from_op(
            vec![c * r * r, oh, ow],
            data,
            vec![self.clone()],
            Box::new(move |ctx| {
                let mut dx = vec![T::ZERO; c * h * w];
                for ci in 0..c {
                    for dy in 0..r {
                        for dx_ in 0..r {
                            let co = ci * r * r + dy * r + dx_;
                            for oy in 0..oh {
                                for ox in 0..ow {
                                    dx[(ci * h + oy * r + dy) * w + ox * r + dx_] =
                                        ctx.out_grad[(co * oh + oy) * ow + ox];
                                }
                            }
                        }
                    }
                }
                vec![dx]
            }),
        ))
    }

    /// `[C, H, W] -> [C/r^2, H*r, W*r]`, scattering channel blocks into
    /// `r x r` cells. Exact inverse of [`Tensor::pixel_unshuffle`].
    pub fn pixel_shuffle(&self, r: usize) -> Result<Tensor<T>> {
        let (c, h, w) = expect_3d("pixel_shuffle", self.shape())?;
        if r == 0 || c % (r * r) != 0 {
            return Err(dim_err(
                "pixel_shuffle",
                format!("factor {}^2 must divide channel extent of {:?}", r, self.shape()),
            ));
        }
        let co = c / (r * r);
        let (oh, ow) = (h * r, w * r);
        let src = self.data();
        let mut data = vec![T::ZERO; c * h * w];
        for ci in 0..co {
            for dy in 0..r {
                for dx in 0..r {
                    let cs = ci * r * r + dy * r + dx;
                    for y in 0..h {
                        for x in 0..w {
                            data[(ci * oh + y * r + dy) * ow + x * r + dx] =
                                src[(cs * h + y) * w + x];
                        }
                    }
                }
            }
        }
        drop(src);
        Ok(Tensor::from_op(
            vec![co, oh, ow],
            data,
            vec![self.clone()],
            Box::new(move |ctx| {
                let mut dx = vec![T::ZERO; c * h * w];
                for ci in 0..co {
                    for dy in 0..r {
                        for dx_ in 0..r {
                            let cs = ci * r * r + dy * r + dx_;
                            for y in 0..h {
                                for x in 0..w {
                                    dx[(cs * h + y) * w + x] =
                                        ctx.out_grad[(ci * oh + y * r + dy) * ow + x * r + dx_];
                                }
                            }
                        }
                    }
                }
                vec![dx]
            }),
        ))
    }
}

/// Concatenates tensors along axis 0; trailing axes must match.
pub fn concat_rows<T: Scalar>(parts: &[Tensor<T>]) -> Result<Tensor<T>> {
    if parts.is_empty() {
        return Err(dim_err("concat_rows", "no tensors given".to_string()));
    }
    let tail = parts[0].shape()[1..].to_vec();
    let mut rows = 0usize;
    for p in parts {
        if p.shape().is_empty() || p.shape()[1..] != tail[..] {
            return Err(dim_err(
                "concat_rows",
                format!("incompatible shapes {:?} vs {:?}", parts[0].shape(), p.shape()),
            ));
        }
        rows += p.shape()[0];
    }
    let rs: usize = tail.iter().product();
    let mut data = Vec::with_capacity(rows * rs);
    for p in parts {
        data.extend_from_slice(&p.data());
    }
    let mut shape = vec![rows];
    shape.extend_from_slice(&tail);
    let sizes: Vec<usize> = parts.iter().map(|p| p.numel()).collect();
    Ok(Tensor::from_op(
        shape,
        data,
        parts.to_vec(),
        Box::new(move |ctx| {
            let mut grads = Vec::with_capacity(sizes.len());
            let mut off = 0;
            for &sz in &sizes {
                grads.push(ctx.out_grad[off..off + sz].to_vec());
                off += sz;
            }
            grads
        }),
    ))
}
