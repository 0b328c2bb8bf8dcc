//! Dense `f64` tensors with reverse-mode automatic differentiation.
//!
//! Every operation that has at least one gradient-tracking input records a
//! node holding its parents and a backward closure. [`backward`] walks the
//! recorded graph from a scalar loss in reverse topological order.
//!
//! Gradients accumulate: calling [`backward`] twice without
//! [`Tensor::zero_grad`] in between adds the second pass onto the first,
//! for leaves and intermediates alike.

use std::cell::{Ref, RefCell, RefMut};
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::rc::Rc;

mod nn;
mod ops;

pub use nn::{conv1d, dropout, global_average_pool, layer_norm, softmax, Mode};
pub use ops::{add, matmul, mean, mul, relu, reshape, scale, sub, sum, transpose};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TensorError {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("cannot broadcast {lhs:?} with {rhs:?}")]
    Broadcast { lhs: Vec<usize>, rhs: Vec<usize> },
    #[error("axis {axis} out of range for rank {rank}")]
    InvalidAxis { axis: usize, rank: usize },
    #[error("{len} values do not fill shape {shape:?}")]
    DataLength { shape: Vec<usize>, len: usize },
    #[error("backward needs a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("{op}: {reason}")]
    InvalidArgument { op: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, TensorError>;

/// Maps the output gradient to one optional gradient per parent.
pub(crate) type BackwardFn = Box<dyn Fn(&[f64]) -> Vec<Option<Vec<f64>>>>;

struct Node {
    op: &'static str,
    parents: Vec<Tensor>,
    backward: BackwardFn,
}

struct Inner {
    shape: Vec<usize>,
    data: RefCell<Vec<f64>>,
    grad: RefCell<Option<Vec<f64>>>,
    requires_grad: bool,
    node: Option<Node>,
}

/// Reference-counted handle; cloning shares storage and graph position.
#[derive(Clone)]
pub struct Tensor(Rc<Inner>);

pub(crate) fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl Tensor {
    pub fn new(data: Vec<f64>, shape: &[usize]) -> Result<Self> {
        Self::build(data, shape, false)
    }

    /// Leaf that receives gradients.
    pub fn parameter(data: Vec<f64>, shape: &[usize]) -> Result<Self> {
        Self::build(data, shape, true)
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::leaf(vec![0.0; numel(shape)], shape.to_vec(), false)
    }

    pub fn scalar(value: f64) -> Self {
        Self::leaf(vec![value], Vec::new(), false)
    }

    pub fn from_slice(values: &[f64]) -> Self {
        Self::leaf(values.to_vec(), vec![values.len()], false)
    }

    fn build(data: Vec<f64>, shape: &[usize], requires_grad: bool) -> Result<Self> {
        if shape.contains(&0) || numel(shape) != data.len() {
            return Err(TensorError::DataLength {
                shape: shape.to_vec(),
                len: data.len(),
            });
        }
        Ok(Self::leaf(data, shape.to_vec(), requires_grad))
    }

    fn leaf(data: Vec<f64>, shape: Vec<usize>, requires_grad: bool) -> Self {
        Tensor(Rc::new(Inner {
            shape,
            data: RefCell::new(data),
            grad: RefCell::new(None),
            requires_grad,
            node: None,
        }))
    }

    /// Result of an operation. Records a graph node only when some parent
    /// tracks gradients.
    pub(crate) fn from_op(
        data: Vec<f64>,
        shape: Vec<usize>,
        op: &'static str,
        parents: Vec<Tensor>,
        backward: BackwardFn,
    ) -> Self {
        debug_assert_eq!(numel(&shape), data.len(), "{op}");
        let requires_grad = parents.iter().any(Tensor::requires_grad);
        let node = requires_grad.then(|| Node {
            op,
            parents,
            backward,
        });
        Tensor(Rc::new(Inner {
            shape,
            data: RefCell::new(data),
            grad: RefCell::new(None),
            requires_grad,
            node,
        }))
    }

    pub fn shape(&self) -> &[usize] {
        &self.0.shape
    }

    pub fn rank(&self) -> usize {
        self.0.shape.len()
    }

    pub fn numel(&self) -> usize {
        numel(&self.0.shape)
    }

    pub fn requires_grad(&self) -> bool {
        self.0.requires_grad
    }

    /// Name of the operation that produced this tensor, `None` for leaves.
    pub fn op_name(&self) -> Option<&'static str> {
        self.0.node.as_ref().map(|n| n.op)
    }

    pub fn data(&self) -> Ref<'_, Vec<f64>> {
        self.0.data.borrow()
    }

    /// Mutable access to the values, used by optimizers and finite-difference
    /// checks. Must not be held across a forward or backward call.
    pub fn data_mut(&self) -> RefMut<'_, Vec<f64>> {
        self.0.data.borrow_mut()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.data.borrow().clone()
    }

    /// The single value of a one-element tensor.
    pub fn item(&self) -> f64 {
        let d = self.0.data.borrow();
        assert_eq!(d.len(), 1, "item() on tensor of shape {:?}", self.0.shape);
        d[0]
    }

    pub fn grad(&self) -> Option<Vec<f64>> {
        self.0.grad.borrow().clone()
    }

    pub fn zero_grad(&self) {
        *self.0.grad.borrow_mut() = None;
    }

    /// Same values, detached from the graph.
    pub fn detach(&self) -> Tensor {
        Self::leaf(self.to_vec(), self.0.shape.clone(), false)
    }

    fn accumulate_grad(&self, g: &[f64]) {
        let mut slot = self.0.grad.borrow_mut();
        match slot.as_mut() {
            Some(acc) => acc.iter_mut().zip(g).for_each(|(a, b)| *a += b),
            None => *slot = Some(g.to_vec()),
        }
    }

    fn key(&self) -> *const Inner {
        Rc::as_ptr(&self.0)
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("Tensor");
        s.field("shape", &self.0.shape);
        if self.numel() <= 16 {
            s.field("data", &*self.0.data.borrow());
        }
        s.field("requires_grad", &self.0.requires_grad);
        if let Some(op) = self.op_name() {
            s.field("op", &op);
        }
        s.finish()
    }
}

/// Parents-before-children order of every gradient-tracking tensor reachable
/// from `root`.
fn topological_order(root: &Tensor) -> Vec<Tensor> {
    let mut order = Vec::new();
    let mut visited = HashSet::new();
    // (tensor, children already pushed)
    let mut stack = vec![(root.clone(), false)];
    while let Some((t, expanded)) = stack.pop() {
        if expanded {
            order.push(t);
            continue;
        }
        if !visited.insert(t.key()) {
            continue;
        }
        stack.push((t.clone(), true));
        if let Some(node) = &t.0.node {
            for p in node.parents.iter().filter(|p| p.requires_grad()) {
                if !visited.contains(&p.key()) {
                    stack.push((p.clone(), false));
                }
            }
        }
    }
    order
}

/// Back-propagates from a one-element `loss`, accumulating `∂loss/∂t` into
/// the gradient buffer of every gradient-tracking tensor `t` on its graph.
pub fn backward(loss: &Tensor) -> Result<()> {
    if loss.numel() != 1 {
        return Err(TensorError::NonScalarLoss(loss.shape().to_vec()));
    }
    if !loss.requires_grad() {
        return Ok(());
    }
    let order = topological_order(loss);
    let mut pending: HashMap<*const Inner, Vec<f64>> = HashMap::new();
    pending.insert(loss.key(), vec![1.0]);
    for t in order.iter().rev() {
        let Some(g) = pending.remove(&t.key()) else {
            continue;
        };
        if let Some(node) = &t.0.node {
            let parent_grads = (node.backward)(&g);
            debug_assert_eq!(parent_grads.len(), node.parents.len(), "{}", node.op);
            for (p, pg) in node.parents.iter().zip(parent_grads) {
                let Some(pg) = pg else { continue };
                if !p.requires_grad() {
                    continue;
                }
                debug_assert_eq!(pg.len(), p.numel(), "grad size from {}", node.op);
                match pending.get_mut(&p.key()) {
                    Some(acc) => acc.iter_mut().zip(&pg).for_each(|(a, b)| *a += b),
                    None => {
                        pending.insert(p.key(), pg);
                    }
                }
            }
        }
        t.accumulate_grad(&g);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_gradient_is_ones() {
        let x = Tensor::parameter(vec![1.0, -2.0, 3.0], &[3]).unwrap();
        let loss = sum(&x);
        backward(&loss).unwrap();
        assert_eq!(x.grad().unwrap(), vec![1.0, 1.0, 1.0]);
        assert_eq!(loss.grad().unwrap(), vec![1.0]);
    }

    #[test]
    fn square_gradient_by_chain_rule() {
        let x = Tensor::parameter(vec![1.0, 2.0], &[2]).unwrap();
        let loss = sum(&mul(&x, &x).unwrap());
        backward(&loss).unwrap();
        assert_eq!(x.grad().unwrap(), vec![2.0, 4.0]);
    }

    #[test]
    fn repeated_backward_accumulates() {
        let x = Tensor::parameter(vec![1.0, 2.0], &[2]).unwrap();
        let loss = sum(&mul(&x, &x).unwrap());
        backward(&loss).unwrap();
        backward(&loss).unwrap();
        assert_eq!(x.grad().unwrap(), vec![4.0, 8.0]);
        x.zero_grad();
        assert!(x.grad().is_none());
    }

    #[test]
    fn shared_subexpression_gets_both_paths() {
        let x = Tensor::parameter(vec![3.0], &[1]).unwrap();
        let y = scale(&x, 2.0);
        let loss = sum(&add(&y, &y).unwrap());
        backward(&loss).unwrap();
        assert_eq!(x.grad().unwrap(), vec![4.0]);
        assert_eq!(y.grad().unwrap(), vec![2.0]);
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let x = Tensor::parameter(vec![1.0, 2.0], &[2]).unwrap();
        assert_eq!(backward(&x), Err(TensorError::NonScalarLoss(vec![2])));
    }

    #[test]
    fn constants_record_no_graph() {
        let a = Tensor::from_slice(&[1.0, 2.0]);
        let b = add(&a, &a).unwrap();
        assert!(!b.requires_grad());
        assert!(b.op_name().is_none());
    }

    #[test]
    fn bad_data_length() {
        assert!(Tensor::new(vec![1.0; 5], &[2, 3]).is_err());
        assert!(Tensor::new(vec![], &[0]).is_err());
    }
}
