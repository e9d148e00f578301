//! Named trainable parameters and the registry that owns them.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{CoreError, Result};
use crate::rng::seeded_rng;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// A named leaf tensor. Clones share storage, so a layer and the registry
/// hold the same values.
#[derive(Clone)]
pub struct Parameter<T: Scalar> {
    name: String,
    tensor: Tensor<T>,
    trainable: bool,
}

impl<T: Scalar> Parameter<T> {
    pub fn new(name: impl Into<String>, tensor: Tensor<T>, trainable: bool) -> Self {
        Parameter { name: name.into(), tensor, trainable }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn tensor(&self) -> &Tensor<T> {
        &self.tensor
    }

    pub fn trainable(&self) -> bool {
        self.trainable
    }

    pub fn numel(&self) -> usize {
        self.tensor.numel()
    }

    pub fn shape(&self) -> &[usize] {
        self.tensor.shape()
    }

    pub fn grad(&self) -> Option<Vec<T>> {
        self.tensor.grad()
    }

    pub fn zero_grad(&self) {
        self.tensor.zero_grad()
    }
}

/// Ordered set of uniquely named parameters.
pub struct ParamSet<T: Scalar> {
    items: Vec<Parameter<T>>,
    index: HashMap<String, usize>,
}

impl<T: Scalar> Default for ParamSet<T> {
    fn default() -> Self {
        ParamSet { items: Vec::new(), index: HashMap::new() }
    }
}

impl<T: Scalar> ParamSet<T> {
    pub fn register(&mut self, p: Parameter<T>) -> Result<()> {
        if self.index.contains_key(p.name()) {
            return Err(CoreError::Usage(format!("duplicate parameter name `{}`", p.name())));
        }
        self.index.insert(p.name().to_string(), self.items.len());
        self.items.push(p);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Parameter<T>> {
        self.index.get(name).map(|&i| &self.items[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter<T>> {
        self.items.iter()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Total scalar count across all parameters.
    pub fn total_scalars(&self) -> usize {
        self.items.iter().map(|p| p.numel()).sum()
    }
}

/// Creates parameters with deterministic per-name initialization.
///
/// Each parameter's stream is seeded from `(seed, name)`, so the same name
/// yields the same values regardless of creation order or which other
/// parameters exist. Draws happen in `f64` and cast, so 32- and 64-bit
/// builds of the same model agree up to rounding.
pub struct ParamBuilder<T: Scalar> {
    seed: u64,
    set: ParamSet<T>,
}

impl<T: Scalar> ParamBuilder<T> {
    pub fn new(seed: u64) -> Self {
        ParamBuilder { seed, set: ParamSet::default() }
    }

    /// `uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))` weight initialization.
    pub fn uniform_fan_in(&mut self, name: &str, shape: Vec<usize>, fan_in: usize) -> Result<Parameter<T>> {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let mut rng = seeded_rng(self.seed, name, 0);
        let numel: usize = shape.iter().product();
        let data: Vec<T> = (0..numel)
            .map(|_| T::from_f64(rng.gen_range(-bound..bound)))
            .collect();
        self.push(name, Tensor::from_vec(shape, data)?, true)
    }

    pub fn constant(&mut self, name: &str, shape: Vec<usize>, v: f64) -> Result<Parameter<T>> {
        let numel: usize = shape.iter().product();
        self.push(name, Tensor::from_vec(shape, vec![T::from_f64(v); numel])?, true)
    }

    pub fn zeros(&mut self, name: &str, shape: Vec<usize>) -> Result<Parameter<T>> {
        self.constant(name, shape, 0.0)
    }

    fn push(&mut self, name: &str, t: Tensor<T>, trainable: bool) -> Result<Parameter<T>> {
        let p = Parameter::new(name, t, trainable);
        self.set.register(p.clone())?;
        Ok(p)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn finish(self) -> ParamSet<T> {
        self.set
    }
}
