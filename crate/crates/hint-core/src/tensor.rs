//! Tensor values and the reverse-mode backward engine.

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock, RwLockReadGuard};

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

/// Context handed to an op's backward function.
pub struct BackCtx<'a, T: Scalar> {
    /// Gradient of the loss with respect to this op's output.
    pub out_grad: &'a [T],
    /// The op's forward output values.
    pub out_data: &'a [T],
    /// The op's inputs, in the order they were recorded.
    pub parents: &'a [Tensor<T>],
}

/// Computes one gradient buffer per parent, each matching that parent's
/// element count.
pub type BackFn<T> = Box<dyn Fn(&BackCtx<'_, T>) -> Vec<Vec<T>> + Send + Sync>;

struct Node<T: Scalar> {
    parents: Vec<Tensor<T>>,
    back: BackFn<T>,
}

struct Inner<T: Scalar> {
    id: u64,
    shape: Vec<usize>,
    // Storage is shared so reshapes alias rather than copy. Writes happen
    // only between forward passes (optimizer updates, test perturbation).
    data: Arc<RwLock<Vec<T>>>,
    grad: Mutex<Option<Vec<T>>>,
    node: Option<Node<T>>,
}

/// Shape-carrying handle over shared scalar storage.
///
/// Cloning is cheap and aliases the same value. Tensors produced by ops keep
/// references to their inputs; the graph is freed when the last handle to
/// its root is dropped.
pub struct Tensor<T: Scalar> {
    inner: Arc<Inner<T>>,
}

impl<T: Scalar> Clone for Tensor<T> {
    fn clone(&self) -> Self {
        Tensor { inner: Arc::clone(&self.inner) }
    }
}

impl<T: Scalar> Tensor<T> {
    fn new(shape: Vec<usize>, data: Arc<RwLock<Vec<T>>>, node: Option<Node<T>>) -> Self {
        Tensor {
            inner: Arc::new(Inner {
                id: fresh_id(),
                shape,
                data,
                grad: Mutex::new(None),
                node,
            }),
        }
    }

    /// Leaf tensor from explicit data.
    pub fn from_vec(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(CoreError::dimension(
                "from_vec",
                format!("shape {:?} wants {} elements, got {}", shape, numel, data.len()),
            ));
        }
        Ok(Tensor::new(shape, Arc::new(RwLock::new(data)), None))
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let numel: usize = shape.iter().product();
        Tensor::new(shape, Arc::new(RwLock::new(vec![T::ZERO; numel])), None)
    }

    pub fn full(shape: Vec<usize>, v: T) -> Self {
        let numel: usize = shape.iter().product();
        Tensor::new(shape, Arc::new(RwLock::new(vec![v; numel])), None)
    }

    pub fn scalar(v: T) -> Self {
        Tensor::new(vec![1], Arc::new(RwLock::new(vec![v])), None)
    }

    /// Op output: records parents and a backward function.
    pub fn from_op(
        shape: Vec<usize>,
        data: Vec<T>,
        parents: Vec<Tensor<T>>,
        back: BackFn<T>,
    ) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Tensor::new(shape, Arc::new(RwLock::new(data)), Some(Node { parents, back }))
    }

    /// Op output that aliases the input's storage (reshape-style views).
    pub(crate) fn from_op_shared(
        shape: Vec<usize>,
        data: Arc<RwLock<Vec<T>>>,
        parents: Vec<Tensor<T>>,
        back: BackFn<T>,
    ) -> Self {
        Tensor::new(shape, data, Some(Node { parents, back }))
    }

    pub(crate) fn storage(&self) -> Arc<RwLock<Vec<T>>> {
        Arc::clone(&self.inner.data)
    }

    pub fn id(&self) -> u64 {
        self.inner.id
    }

    pub fn shape(&self) -> &[usize] {
        &self.inner.shape
    }

    pub fn numel(&self) -> usize {
        self.inner.shape.iter().product()
    }

    pub fn is_leaf(&self) -> bool {
        self.inner.node.is_none()
    }

    /// Read access to the values.
    pub fn data(&self) -> RwLockReadGuard<'_, Vec<T>> {
        self.inner.data.read().expect("tensor storage poisoned")
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.data().clone()
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> Result<T> {
        if self.numel() != 1 {
            return Err(CoreError::dimension(
                "item",
                format!("expected 1 element, shape is {:?}", self.shape()),
            ));
        }
        Ok(self.data()[0])
    }

    /// Mutates the stored values in place. Only meaningful on leaves between
    /// forward passes (optimizer steps, finite-difference probes).
    pub fn modify(&self, f: impl FnOnce(&mut Vec<T>)) {
        let mut guard = self.inner.data.write().expect("tensor storage poisoned");
        f(&mut guard);
    }

    /// Accumulated gradient, if a backward pass has reached this tensor.
    pub fn grad(&self) -> Option<Vec<T>> {
        self.inner.grad.lock().expect("grad poisoned").clone()
    }

    pub fn zero_grad(&self) {
        *self.inner.grad.lock().expect("grad poisoned") = None;
    }

    fn accumulate_grad(&self, g: &[T]) {
        let mut guard = self.inner.grad.lock().expect("grad poisoned");
        match guard.as_mut() {
            Some(existing) => {
                for (e, v) in existing.iter_mut().zip(g) {
                    *e += *v;
                }
            }
            None => *guard = Some(g.to_vec()),
        }
    }

    /// Leaf aliasing this tensor's values but detached from the graph.
    pub fn detach(&self) -> Tensor<T> {
        Tensor::new(self.inner.shape.clone(), Arc::clone(&self.inner.data), None)
    }

    /// Reverse-mode gradient of a scalar with respect to every ancestor.
    ///
    /// Gradients accumulate into each ancestor's `grad` slot; repeated calls
    /// without [`Tensor::zero_grad`] add up. The recorded graph stays intact
    /// (it is freed when the loss handle is dropped).
    pub fn backward(&self) -> Result<()> {
        if self.numel() != 1 {
            return Err(CoreError::dimension(
                "backward",
                format!("loss must be scalar, shape is {:?}", self.shape()),
            ));
        }

        // Collect every reachable tensor. Creation ids are strictly
        // increasing and parents always predate children, so descending id
        // order is a valid reverse topological order.
        let mut stack = vec![self.clone()];
        let mut seen: HashSet<u64> = HashSet::new();
        let mut order: Vec<Tensor<T>> = Vec::new();
        while let Some(t) = stack.pop() {
            if !seen.insert(t.inner.id) {
                continue;
            }
            if let Some(node) = &t.inner.node {
                for p in &node.parents {
                    if !seen.contains(&p.inner.id) {
                        stack.push(p.clone());
                    }
                }
            }
            order.push(t);
        }
        order.sort_by(|a, b| b.inner.id.cmp(&a.inner.id));

        // Per-pass gradients; merged into the persistent slots at the end so
        // repeated backward calls accumulate instead of compounding.
        let mut grads: HashMap<u64, Vec<T>> = HashMap::new();
        grads.insert(self.inner.id, vec![T::ONE]);

        for t in &order {
            let Some(g) = grads.remove(&t.inner.id) else {
                continue;
            };
            if let Some(node) = &t.inner.node {
                let out_data = t.data();
                let ctx = BackCtx { out_grad: &g, out_data: &out_data, parents: &node.parents };
                let parent_grads = (node.back)(&ctx);
                drop(out_data);
                debug_assert_eq!(parent_grads.len(), node.parents.len());
                for (p, pg) in node.parents.iter().zip(parent_grads) {
                    debug_assert_eq!(pg.len(), p.numel());
                    match grads.get_mut(&p.inner.id) {
                        Some(acc) => {
                            for (a, v) in acc.iter_mut().zip(&pg) {
                                *a += *v;
                            }
                        }
                        None => {
                            grads.insert(p.inner.id, pg);
                        }
                    }
                }
            }
            t.accumulate_grad(&g);
        }
        Ok(())
    }
}

impl<T: Scalar> std::fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tensor")
            .field("id", &self.inner.id)
            .field("shape", &self.inner.shape)
            .field("leaf", &self.is_leaf())
            .finish()
    }
}
