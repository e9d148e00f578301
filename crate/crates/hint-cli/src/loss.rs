//! Training loss.

use hint_core::{Result, Scalar, Tensor};

/// Mean absolute error, `mean(|pred - target|)`, as a scalar graph node.
/// The subgradient at exact ties is 0.
pub fn l1_loss<T: Scalar>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<Tensor<T>> {
    pred.sub(target)?.abs_t().mean()
}
