//! Differentiable tensor operations.
//!
//! Each op validates shapes, runs a kernel for its forward value, and
//! records a backward function producing one gradient buffer per input.

mod conv;
mod elementwise;
mod matmul;
mod norm;
mod reduce;
mod resize;
mod shape;

pub use norm::{L2_NORM_EPS, LAYER_NORM_EPS};
pub use shape::concat_rows;

use crate::error::CoreError;

pub(crate) fn dim_err(op: &'static str, details: String) -> CoreError {
    CoreError::dimension(op, details)
}

pub(crate) fn expect_2d(op: &'static str, shape: &[usize]) -> Result<(usize, usize), CoreError> {
    match shape {
        [r, c] => Ok((*r, *c)),
        other => Err(dim_err(op, format!("expected 2D tensor, got shape {:?}", other))),
    }
}

pub(crate) fn expect_3d(op: &'static str, shape: &[usize]) -> Result<(usize, usize, usize), CoreError> {
    match shape {
        [c, h, w] => Ok((*c, *h, *w)),
        other => Err(dim_err(op, format!("expected 3D tensor, got shape {:?}", other))),
    }
}
