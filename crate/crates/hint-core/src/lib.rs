//! Dense tensor engine with reverse-mode automatic differentiation.
//!
//! Tensors are immutable value-like handles over shared storage. Every
//! operation records the inputs it needs for its backward pass; calling
//! [`Tensor::backward`] on a scalar loss walks the recorded graph once in
//! reverse topological order and accumulates gradients on every ancestor.
//!
//! The compute kernels behind the ops live in [`kernels`]. With the
//! `parallel` feature (default) the large kernels run data-parallel via
//! rayon; results are bitwise identical to the sequential fallback for any
//! thread count because each output element keeps a fixed reduction order.

pub mod error;
pub mod gradcheck;
pub mod kernels;
pub mod ops;
pub mod params;
pub mod rng;
pub mod scalar;
pub mod tensor;

pub use error::{CoreError, Result};
pub use params::{ParamBuilder, ParamSet, Parameter};
pub use scalar::Scalar;
pub use tensor::Tensor;
