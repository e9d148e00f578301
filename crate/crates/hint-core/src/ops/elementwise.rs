//! Elementwise and broadcast operations.

use super::dim_err;
use crate::error::Result;
use crate::scalar::{gelu_grad_scalar, gelu_scalar, Scalar};
use crate::tensor::Tensor;

fn same_shape<T: Scalar>(op: &'static str, a: &Tensor<T>, b: &Tensor<T>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(dim_err(op, format!("lhs shape {:?} vs rhs shape {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

impl<T: Scalar> Tensor<T> {
    pub fn add(&self, rhs: &Tensor<T>) -> Result<Tensor<T>> {
        same_shape("add", self, rhs)?;
        let data = {
            let (a, b) = (self.data(), rhs.data());
            a.iter().zip(b.iter()).map(|(x, y)| *x + *y).collect()
        };
        Ok(Tensor::from_op(
            self.shape().to_vec(),
            data,
            vec![self.clone(), rhs.clone()],
            Box::new(|ctx| vec![ctx.out_grad.to_vec(), ctx.out_grad.to_vec()]),
        ))
    }

    pub fn sub(&self, rhs: &Tensor<T>) -> Result<Tensor<T>> {
        same_shape("sub", self, rhs)?;
        let data = {
            let (a, b) = (self.data(), rhs.data());
            a.iter().zip(b.iter()).map(|(x, y)| *x - *y).collect()
        };
        Ok(Tensor::from_op(
            self.shape().to_vec(),
            data,
            vec![self.clone(), rhs.clone()],
            Box::new(|ctx| {
                vec![ctx.out_grad.to_vec(), ctx.out_grad.iter().map(|g| -*g).collect()]
            }),
        ))
    }

    pub fn mul(&self, rhs: &Tensor<T>) -> Result<Tensor<T>> {
        same_shape("mul", self, rhs)?;
        let data = {
            let (a, b) = (self.data(), rhs.data());
            a.iter().zip(b.iter()).map(|(x, y)| *x * *y).collect()
        };
        Ok(Tensor::from_op(
            self.shape().to_vec(),
            data,
            vec![self.clone(), rhs.clone()],
            Box::new(|ctx| {
                let a = ctx.parents[0].data();
                let b = ctx.parents[1].data();
                let da = ctx.out_grad.iter().zip(b.iter()).map(|(g, y)| *g * *y).collect();
                let db = ctx.out_grad.iter().zip(a.iter()).map(|(g, x)| *g * *x).collect();
                vec![da, db]
            }),
        ))
    }

    /// `a * x + b` with constant scalars.
    pub fn affine(&self, a: T, b: T) -> Tensor<T> {
        let data = self.data().iter().map(|x| a * *x + b).collect();
        Tensor::from_op(
            self.shape().to_vec(),
            data,
            vec![self.clone()],
            Box::new(move |ctx| vec![ctx.out_grad.iter().map(|g| a * *g).collect()]),
        )
    }

    pub fn neg_t(&self) -> Tensor<T> {
        self.affine(-T::ONE, T::ZERO)
    }

    pub fn abs_t(&self) -> Tensor<T> {
        let data = self.data().iter().map(|x| x.abs()).collect();
        Tensor::from_op(
            self.shape().to_vec(),
            data,
            vec![self.clone()],
            Box::new(|ctx| {
                let x = ctx.parents[0].data();
                vec![ctx.out_grad.iter().zip(x.iter()).map(|(g, v)| *g * v.signum0()).collect()]
            }),
        )
    }

    /// Exact GELU, `x * Phi(x)`.
    pub fn gelu(&self) -> Tensor<T> {
        let data = self.data().iter().map(|x| gelu_scalar(*x)).collect();
        Tensor::from_op(
            self.shape().to_vec(),
            data,
            vec![self.clone()],
            Box::new(|ctx| {
                let x = ctx.parents[0].data();
                vec![ctx
                    .out_grad
                    .iter()
                    .zip(x.iter())
                    .map(|(g, v)| *g * gelu_grad_scalar(*v))
                    .collect()]
            }),
        )
    }

    /// Multiply by a single-element tensor, broadcasting it everywhere.
    pub fn scale_by(&self, s: &Tensor<T>) -> Result<Tensor<T>> {
        if s.numel() != 1 {
            return Err(dim_err("scale_by", format!("scale must be scalar, got {:?}", s.shape())));
        }
        let sv = s.data()[0];
        let data = self.data().iter().map(|x| *x * sv).collect();
        Ok(Tensor::from_op(
            self.shape().to_vec(),
            data,
            vec![self.clone(), s.clone()],
            Box::new(|ctx| {
                let x = ctx.parents[0].data();
                let sv = ctx.parents[1].data()[0];
                let dx = ctx.out_grad.iter().map(|g| *g * sv).collect();
                let ds = ctx.out_grad.iter().zip(x.iter()).map(|(g, v)| *g * *v).sum::<T>();
                vec![dx, vec![ds]]
            }),
        ))
    }

    /// Add `bias[r]` to every element of row `r` (axis-0 slices).
    /// For `[C, H, W]` data this is a per-channel bias.
    pub fn add_bias_per_row(&self, bias: &Tensor<T>) -> Result<Tensor<T>> {
        let rows = *self.shape().first().ok_or_else(|| {
            dim_err("add_bias_per_row", "input must have at least 1 axis".to_string())
        })?;
        if bias.shape() != [rows] {
            return Err(dim_err(
                "add_bias_per_row",
                format!("bias shape {:?} vs {} rows of input {:?}", bias.shape(), rows, self.shape()),
            ));
        }
        let rs = self.numel() / rows;
        let mut data = self.to_vec();
        {
            let b = bias.data();
            for r in 0..rows {
                let bv = b[r];
                for v in &mut data[r * rs..(r + 1) * rs] {
                    *v += bv;
                }
            }
        }
        Ok(Tensor::from_op(
            self.shape().to_vec(),
            data,
            vec![self.clone(), bias.clone()],
            Box::new(move |ctx| {
                let mut db = vec![T::ZERO; rows];
                for (r, d) in db.iter_mut().enumerate() {
                    *d = ctx.out_grad[r * rs..(r + 1) * rs].iter().copied().sum();
                }
                vec![ctx.out_grad.to_vec(), db]
            }),
        ))
    }

    /// Add `bias[c]` to column `c` of a 2D tensor.
    pub fn add_bias_per_col(&self, bias: &Tensor<T>) -> Result<Tensor<T>> {
        let (r, c) = super::expect_2d("add_bias_per_col", self.shape())?;
        if bias.shape() != [c] {
            return Err(dim_err(
                "add_bias_per_col",
                format!("bias shape {:?} vs {} columns of input {:?}", bias.shape(), c, self.shape()),
            ));
        }
        let mut data = self.to_vec();
        {
            let b = bias.data();
            for row in data.chunks_mut(c) {
                for (v, bv) in row.iter_mut().zip(b.iter()) {
                    *v += *bv;
                }
            }
        }
        Ok(Tensor::from_op(
            vec![r, c],
            data,
            vec![self.clone(), bias.clone()],
            Box::new(move |ctx| {
                let mut db = vec![T::ZERO; c];
                for row in ctx.out_grad.chunks(c) {
                    for (d, g) in db.iter_mut().zip(row.iter()) {
                        *d += *g;
                    }
                }
                vec![ctx.out_grad.to_vec(), db]
            }),
        ))
    }
}
