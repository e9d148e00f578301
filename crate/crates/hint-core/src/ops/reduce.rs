//! Reductions to scalars.

use crate::error::Result;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

impl<T: Scalar> Tensor<T> {
    pub fn sum(&self) -> Result<Tensor<T>> {
        let s: T = self.data().iter().copied().sum();
        let n = self.numel();
        Ok(Tensor::from_op(
            vec![1],
            vec![s],
            vec![self.clone()],
            Box::new(move |ctx| vec![vec![ctx.out_grad[0]; n]]),
        ))
    }

    pub fn mean(&self) -> Result<Tensor<T>> {
        let n = self.numel();
        let inv = T::ONE / T::from_f64(n as f64);
        let s: T = self.data().iter().copied().sum::<T>() * inv;
        Ok(Tensor::from_op(
            vec![1],
            vec![s],
            vec![self.clone()],
            Box::new(move |ctx| vec![vec![ctx.out_grad[0] * inv; n]]),
        ))
    }
}
