//! Grouped 2D cross-correlation.

use super::{dim_err, expect_3d};
use crate::error::Result;
use crate::kernels::{self, ConvGeom};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

impl<T: Scalar> Tensor<T> {
    /// Cross-correlates `self[Cin, H, W]` with `kernel[Cout, Cin/groups, Kh, Kw]`.
    pub fn conv2d(&self, kernel: &Tensor<T>, stride: usize, pad: usize, groups: usize) -> Result<Tensor<T>> {
        let (cin, h, w) = expect_3d("conv2d", self.shape())?;
        let kshape = kernel.shape();
        let [cout, kcin, kh, kw] = match kshape {
            [a, b, c, d] => [*a, *b, *c, *d],
            other => {
                return Err(dim_err("conv2d", format!("kernel must be 4D, got {:?}", other)));
            }
        };
        if stride == 0 {
            return Err(dim_err("conv2d", "stride must be positive".to_string()));
        }
        if groups == 0 || cin % groups != 0 || cout % groups != 0 {
            return Err(dim_err(
                "conv2d",
                format!("groups {} must divide cin {} and cout {}", groups, cin, cout),
            ));
        }
        if kcin != cin / groups {
            return Err(dim_err(
                "conv2d",
                format!("kernel input extent {} vs cin/groups {} (input {:?}, kernel {:?})",
                    kcin, cin / groups, self.shape(), kshape),
            ));
        }
        if h + 2 * pad < kh || w + 2 * pad < kw {
            return Err(dim_err(
                "conv2d",
                format!("kernel {}x{} exceeds padded input {}x{}", kh, kw, h + 2 * pad, w + 2 * pad),
            ));
        }
        let geom = ConvGeom { cin, h, w, cout, kh, kw, stride, pad, groups };
        let (oh, ow) = (geom.out_h(), geom.out_w());
        let mut out = vec![T::ZERO; cout * oh * ow];
        kernels::conv2d_fwd(&self.data(), &kernel.data(), &mut out, &geom);
        Ok(Tensor::from_op(
            vec![cout, oh, ow],
            out,
            vec![self.clone(), kernel.clone()],
            Box::new(move |ctx| {
                let x = ctx.parents[0].data();
                let k = ctx.parents[1].data();
                let mut gx = vec![T::ZERO; x.len()];
                kernels::conv2d_bwd_input(&k, ctx.out_grad, &mut gx, &geom);
                let mut gk = vec![T::ZERO; k.len()];
                kernels::conv2d_bwd_kernel(&x, ctx.out_grad, &mut gk, &geom);
                vec![gx, gk]
            }),
        ))
    }
}
