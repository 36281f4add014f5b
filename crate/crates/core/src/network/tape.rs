//! Reverse-mode differentiation over a tape of vector-valued nodes.
//!
//! Every node holds a flat `Vec<T>`. An op records its parents and an adjoint
//! closure mapping the output gradient to parent gradients. Nodes are
//! appended in evaluation order, so walking the tape backwards is a reverse
//! topological order and each node's adjoint runs exactly once.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Inputs handed to an adjoint closure.
pub struct Adjoint<'a, T> {
    /// Gradient of the loss with respect to this node's value.
    pub grad: &'a [T],
    /// This node's forward value.
    pub value: &'a [T],
    /// Forward values of the parents, in the order they were recorded.
    pub parents: &'a [&'a [T]],
    /// Whether each parent needs a gradient.
    pub needs: &'a [bool],
}

/// Returns one gradient contribution per parent (`None` where not needed).
pub type BackwardFn<T> = Box<dyn Fn(&Adjoint<'_, T>) -> Vec<Option<Vec<T>>> + Send + Sync>;

struct Node<T> {
    value: Vec<T>,
    parents: Vec<usize>,
    needs_grad: bool,
    backward: Option<BackwardFn<T>>,
}

pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    grads: Vec<Vec<T>>,
    done: bool,
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new(), grads: Vec::new(), done: false }
    }

    /// Drop every node so the tape can record a new computation.
    pub fn reset(&mut self) {
        self.nodes.clear();
        self.grads.clear();
        self.done = false;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// A differentiable input (parameter).
    pub fn leaf(&mut self, value: Vec<T>) -> Var {
        self.nodes.push(Node { value, parents: Vec::new(), needs_grad: true, backward: None });
        Var(self.nodes.len() - 1)
    }

    /// A non-differentiable input (data).
    pub fn constant(&mut self, value: Vec<T>) -> Var {
        self.nodes.push(Node { value, parents: Vec::new(), needs_grad: false, backward: None });
        Var(self.nodes.len() - 1)
    }

    /// Record an op. `backward` is dropped when no parent needs a gradient.
    pub fn push(&mut self, value: Vec<T>, parents: &[Var], backward: BackwardFn<T>) -> Var {
        let needs_grad = parents.iter().any(|p| self.nodes[p.0].needs_grad);
        self.nodes.push(Node {
            value,
            parents: parents.iter().map(|p| p.0).collect(),
            needs_grad,
            backward: needs_grad.then_some(backward),
        });
        Var(self.nodes.len() - 1)
    }

    #[inline]
    pub fn value(&self, v: Var) -> &[T] {
        &self.nodes[v.0].value
    }

    pub fn needs_grad(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Accumulate `∂loss/∂node` for every node; `loss` must hold one value.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.done {
            return Err(Error::BackwardTwice);
        }
        if self.nodes[loss.0].value.len() != 1 {
            return Err(Error::ShapeMismatch(format!(
                "backward needs a scalar loss, node has {} values",
                self.nodes[loss.0].value.len()
            )));
        }
        self.done = true;
        self.grads = self.nodes.iter().map(|_| Vec::new()).collect();
        self.grads[loss.0] = vec![T::one()];
        for idx in (0..=loss.0).rev() {
            if self.grads[idx].is_empty() {
                continue;
            }
            let node = &self.nodes[idx];
            let Some(bw) = node.backward.as_ref() else { continue };
            let parents: Vec<&[T]> = node.parents.iter().map(|&p| self.nodes[p].value.as_slice()).collect();
            let needs: Vec<bool> = node.parents.iter().map(|&p| self.nodes[p].needs_grad).collect();
            let contribs = bw(&Adjoint { grad: &self.grads[idx], value: &node.value, parents: &parents, needs: &needs });
            debug_assert_eq!(contribs.len(), node.parents.len());
            let parent_ids = node.parents.clone();
            for (p, c) in parent_ids.into_iter().zip(contribs) {
                let Some(c) = c else { continue };
                let g = &mut self.grads[p];
                if g.is_empty() {
                    *g = c;
                } else {
                    for (a, b) in g.iter_mut().zip(&c) {
                        *a += *b;
                    }
                }
            }
        }
        Ok(())
    }

    /// Gradient of the last backward pass; zeros if the node did not influence the loss.
    pub fn grad(&self, v: Var) -> Vec<T> {
        match self.grads.get(v.0) {
            Some(g) if !g.is_empty() => g.clone(),
            _ => vec![T::zero(); self.nodes[v.0].value.len()],
        }
    }

    fn unary(&mut self, x: Var, value: Vec<T>, df: impl Fn(T, T) -> T + Send + Sync + 'static) -> Var {
        // df(input, output) is the elementwise derivative
        self.push(
            value,
            &[x],
            Box::new(move |a| {
                let g = a.grad.iter().zip(a.parents[0]).zip(a.value).map(|((g, x), y)| *g * df(*x, *y)).collect();
                vec![Some(g)]
            }),
        )
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).iter().zip(self.value(b)).map(|(x, y)| *x + *y).collect();
        self.push(v, &[a, b], Box::new(|ad| vec![Some(ad.grad.to_vec()), Some(ad.grad.to_vec())]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).iter().zip(self.value(b)).map(|(x, y)| *x - *y).collect();
        self.push(
            v,
            &[a, b],
            Box::new(|ad| vec![Some(ad.grad.to_vec()), Some(ad.grad.iter().map(|g| -*g).collect())]),
        )
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).iter().zip(self.value(b)).map(|(x, y)| *x * *y).collect();
        self.push(
            v,
            &[a, b],
            Box::new(|ad| {
                let (x, y) = (ad.parents[0], ad.parents[1]);
                let ga = ad.needs[0].then(|| ad.grad.iter().zip(y).map(|(g, v)| *g * *v).collect());
                let gb = ad.needs[1].then(|| ad.grad.iter().zip(x).map(|(g, v)| *g * *v).collect());
                vec![ga, gb]
            }),
        )
    }

    pub fn scale(&mut self, a: Var, c: T) -> Var {
        let v = self.value(a).iter().map(|x| *x * c).collect();
        self.push(v, &[a], Box::new(move |ad| vec![Some(ad.grad.iter().map(|g| *g * c).collect())]))
    }

    pub fn add_scalar(&mut self, a: Var, c: T) -> Var {
        let v = self.value(a).iter().map(|x| *x + c).collect();
        self.push(v, &[a], Box::new(|ad| vec![Some(ad.grad.to_vec())]))
    }

    pub fn square(&mut self, a: Var) -> Var {
        let v = self.value(a).iter().map(|x| *x * *x).collect();
        self.unary(a, v, |x, _| x + x)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let v = self.value(a).iter().map(|x| x.exp()).collect();
        self.unary(a, v, |_, y| y)
    }

    pub fn ln(&mut self, a: Var) -> Var {
        let v = self.value(a).iter().map(|x| x.ln()).collect();
        self.unary(a, v, |x, _| T::one() / x)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).iter().map(|x| x.max(T::zero())).collect();
        self.unary(a, v, |x, _| if x > T::zero() { T::one() } else { T::zero() })
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).iter().map(|x| x.tanh()).collect();
        self.unary(a, v, |_, y| T::one() - y * y)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).iter().copied().sum();
        let n = self.value(a).len();
        self.push(vec![s], &[a], Box::new(move |ad| vec![Some(vec![ad.grad[0]; n])]))
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let n = self.value(a).len().max(1);
        let s = self.sum(a);
        self.scale(s, T::one() / T::from_usize_lossy(n))
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Var {
        let m = self.mul(a, b);
        self.sum(m)
    }
}
