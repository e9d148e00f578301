//! Matrix products.

use super::{dim_err, expect_2d};
use crate::error::Result;
use crate::kernels;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

impl<T: Scalar> Tensor<T> {
    /// `self[m x k] * rhs[k x n]`
    pub fn matmul(&self, rhs: &Tensor<T>) -> Result<Tensor<T>> {
        let (m, k) = expect_2d("matmul", self.shape())?;
        let (k2, n) = expect_2d("matmul", rhs.shape())?;
        if k != k2 {
            return Err(dim_err(
                "matmul",
                format!("inner extents differ: lhs {:?} vs rhs {:?}", self.shape(), rhs.shape()),
            ));
        }
        let mut out = vec![T::ZERO; m * n];
        kernels::matmul_nn(&self.data(), &rhs.data(), &mut out, m, k, n);
        Ok(Tensor::from_op(
            vec![m, n],
            out,
            vec![self.clone(), rhs.clone()],
            Box::new(move |ctx| {
                let a = ctx.parents[0].data();
                let b = ctx.parents[1].data();
                let mut da = vec![T::ZERO; m * k];
                kernels::matmul_nt(ctx.out_grad, &b, &mut da, m, n, k);
                let mut db = vec![T::ZERO; k * n];
                kernels::matmul_tn(&a, ctx.out_grad, &mut db, m, k, n);
                vec![da, db]
            }),
        ))
    }

    /// `self[m x k] * rhs[n x k]^T`; avoids materializing the transpose.
    pub fn matmul_nt(&self, rhs: &Tensor<T>) -> Result<Tensor<T>> {
        let (m, k) = expect_2d("matmul_nt", self.shape())?;
        let (n, k2) = expect_2d("matmul_nt", rhs.shape())?;
        if k != k2 {
            return Err(dim_err(
                "matmul_nt",
                format!("inner extents differ: lhs {:?} vs rhs^T {:?}", self.shape(), rhs.shape()),
            ));
        }
        let mut out = vec![T::ZERO; m * n];
        kernels::matmul_nt(&self.data(), &rhs.data(), &mut out, m, k, n);
        Ok(Tensor::from_op(
            vec![m, n],
            out,
            vec![self.clone(), rhs.clone()],
            Box::new(move |ctx| {
                let a = ctx.parents[0].data();
                let b = ctx.parents[1].data();
                // d(a) = g[m x n] * b[n x k]
                let mut da = vec![T::ZERO; m * k];
                kernels::matmul_nn(ctx.out_grad, &b, &mut da, m, n, k);
                // d(b) = g^T[n x m] * a[m x k]
                let mut db = vec![T::ZERO; n * k];
                kernels::matmul_tn(ctx.out_grad, &a, &mut db, m, n, k);
                vec![da, db]
            }),
        ))
    }
}
