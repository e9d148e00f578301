//! Bilinear resize of 2D maps.

use super::expect_2d;
use crate::error::Result;
use crate::kernels;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

impl<T: Scalar> Tensor<T> {
    /// Bilinear resize of a 2D map with the align-corners convention.
    /// Resizing to the input's own extents is an exact identity.
    pub fn bilinear_resize(&self, rows: usize, cols: usize) -> Result<Tensor<T>> {
        let (sr, sc) = expect_2d("bilinear_resize", self.shape())?;
        let mut out = vec![T::ZERO; rows * cols];
        kernels::bilinear_resize(&self.data(), sr, sc, &mut out, rows, cols);
        Ok(Tensor::from_op(
            vec![rows, cols],
            out,
            vec![self.clone()],
            Box::new(move |ctx| {
                let mut gx = vec![T::ZERO; sr * sc];
                kernels::bilinear_resize_bwd(ctx.out_grad, rows, cols, &mut gx, sr, sc);
                vec![gx]
            }),
        ))
    }
}
