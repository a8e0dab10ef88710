//! Tape-based reverse-mode differentiation over dense tensors.
//!
//! Every operation appends a node to the [`Graph`]; nodes are created in
//! topological order, so [`Graph::backward`] walks them in reverse index order
//! and visits each node once.

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Handle to a node recorded on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryKind {
    Sigmoid,
    Relu,
    Log,
    Exp,
    Neg,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Affine { x: Var, w: Var, b: Var },
    Unary { kind: UnaryKind, x: Var },
    Clamp { x: Var, lo: f64, hi: f64 },
    ScaleShift { x: Var, scale: f64 },
    Pow { x: Var, exponent: f64 },
    Add { a: Var, b: Var },
    Sub { a: Var, b: Var },
    Mul { a: Var, b: Var },
    BroadcastAdd { col: Var, row: Var },
    LogSoftmax { x: Var },
    WeightedSum { x: Var, weights: Vec<f64> },
    OrderedBiases { theta: Var },
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

#[derive(Debug, Default, Clone)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Gradients produced by [`Graph::backward`], indexed by [`Var`].
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient with respect to `var`; zeros when the loss does not depend on it.
    pub fn get(&self, var: Var) -> Tensor {
        let shape = &self.shapes[var.0];
        match &self.grads[var.0] {
            Some(g) => Tensor::new(shape.clone(), g.clone()).expect("gradient shape"),
            None => Tensor::zeros(shape),
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn same_shape(a: &Tensor, b: &Tensor, what: &str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!(
            "{what}: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Adds a leaf that gradients are tracked for.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Adds a leaf that is treated as a constant.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    pub fn requires_grad(&self, var: Var) -> bool {
        self.nodes[var.0].requires_grad
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn any_grad(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// `x W + b` for `x: [n, d_in]`, `W: [d_in, d_out]`, `b: [d_out]`.
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (n, d_in) = self.value(x).as_matrix()?;
        let (w_in, d_out) = self.value(w).as_matrix()?;
        if w_in != d_in || self.value(b).len() != d_out {
            return Err(Error::Shape(format!(
                "affine: x {:?}, W {:?}, b {:?}",
                self.value(x).shape(),
                self.value(w).shape(),
                self.value(b).shape()
            )));
        }
        let xs = self.value(x).data();
        let ws = self.value(w).data();
        let bs = self.value(b).data();
        let mut out = vec![0.0; n * d_out];
        for i in 0..n {
            let row = &mut out[i * d_out..(i + 1) * d_out];
            row.copy_from_slice(bs);
            for j in 0..d_in {
                let xv = xs[i * d_in + j];
                if xv == 0.0 {
                    continue;
                }
                let wrow = &ws[j * d_out..(j + 1) * d_out];
                for (o, &wv) in row.iter_mut().zip(wrow) {
                    *o += xv * wv;
                }
            }
        }
        let value = Tensor::new(vec![n, d_out], out)?;
        let rg = self.any_grad(&[x, w, b]);
        Ok(self.push(value, Op::Affine { x, w, b }, rg))
    }

    pub fn unary(&mut self, kind: UnaryKind, x: Var) -> Result<Var> {
        let src = self.value(x);
        let data: Vec<f64> = match kind {
            UnaryKind::Sigmoid => src.data().iter().map(|&v| sigmoid(v)).collect(),
            UnaryKind::Relu => src.data().iter().map(|&v| v.max(0.0)).collect(),
            UnaryKind::Log => {
                if let Some(bad) = src.data().iter().find(|&&v| v.is_nan() || v <= 0.0) {
                    return Err(Error::Numerical(format!("log of non-positive value {bad}")));
                }
                src.data().iter().map(|&v| v.ln()).collect()
            }
            UnaryKind::Exp => src.data().iter().map(|&v| v.exp()).collect(),
            UnaryKind::Neg => src.data().iter().map(|&v| -v).collect(),
        };
        let value = Tensor::new(src.shape().to_vec(), data)?;
        let rg = self.any_grad(&[x]);
        Ok(self.push(value, Op::Unary { kind, x }, rg))
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        self.unary(UnaryKind::Sigmoid, x)
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        self.unary(UnaryKind::Relu, x)
    }

    pub fn log(&mut self, x: Var) -> Result<Var> {
        self.unary(UnaryKind::Log, x)
    }

    pub fn exp(&mut self, x: Var) -> Result<Var> {
        self.unary(UnaryKind::Exp, x)
    }

    pub fn neg(&mut self, x: Var) -> Result<Var> {
        self.unary(UnaryKind::Neg, x)
    }

    /// Elementwise clamp into `[lo, hi]`; the gradient is zero where clamping applied.
    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Var {
        let src = self.value(x);
        let data = src.data().iter().map(|&v| v.clamp(lo, hi)).collect();
        let value = Tensor::new(src.shape().to_vec(), data).expect("same shape");
        let rg = self.any_grad(&[x]);
        self.push(value, Op::Clamp { x, lo, hi }, rg)
    }

    /// `scale * x + shift`, elementwise.
    pub fn scale_shift(&mut self, x: Var, scale: f64, shift: f64) -> Var {
        let src = self.value(x);
        let data = src.data().iter().map(|&v| scale * v + shift).collect();
        let value = Tensor::new(src.shape().to_vec(), data).expect("same shape");
        let rg = self.any_grad(&[x]);
        self.push(value, Op::ScaleShift { x, scale }, rg)
    }

    /// `x^exponent`, elementwise. Inputs must be non-negative.
    pub fn pow(&mut self, x: Var, exponent: f64) -> Result<Var> {
        let src = self.value(x);
        if let Some(bad) = src.data().iter().find(|&&v| v < 0.0) {
            return Err(Error::Numerical(format!("pow of negative base {bad}")));
        }
        let data = src.data().iter().map(|&v| v.powf(exponent)).collect();
        let value = Tensor::new(src.shape().to_vec(), data)?;
        let rg = self.any_grad(&[x]);
        Ok(self.push(value, Op::Pow { x, exponent }, rg))
    }

    fn binary(&mut self, a: Var, b: Var, what: &str, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        same_shape(self.value(a), self.value(b), what)?;
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        Tensor::new(self.value(a).shape().to_vec(), data)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.binary(a, b, "add", |x, y| x + y)?;
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(value, Op::Add { a, b }, rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.binary(a, b, "sub", |x, y| x - y)?;
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(value, Op::Sub { a, b }, rg))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.binary(a, b, "mul", |x, y| x * y)?;
        let rg = self.any_grad(&[a, b]);
        Ok(self.push(value, Op::Mul { a, b }, rg))
    }

    /// `out[i][j] = col[i] + row[j]` for `col: [n, 1]` and `row: [m]`.
    pub fn broadcast_add(&mut self, col: Var, row: Var) -> Result<Var> {
        let (n, one) = self.value(col).as_matrix()?;
        if one != 1 {
            return Err(Error::Shape(format!(
                "broadcast_add: column operand must be [n, 1], got {:?}",
                self.value(col).shape()
            )));
        }
        let r = self.value(row).data();
        let m = r.len();
        let c = self.value(col).data();
        let mut out = Vec::with_capacity(n * m);
        for &cv in c {
            out.extend(r.iter().map(|&rv| cv + rv));
        }
        let value = Tensor::new(vec![n, m], out)?;
        let rg = self.any_grad(&[col, row]);
        Ok(self.push(value, Op::BroadcastAdd { col, row }, rg))
    }

    /// Row-wise log-softmax of a `[n, m]` tensor, stabilized by the row maximum.
    pub fn log_softmax(&mut self, x: Var) -> Result<Var> {
        let (n, m) = self.value(x).as_matrix()?;
        let src = self.value(x).data();
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            let row = &src[i * m..(i + 1) * m];
            let lse = log_sum_exp(row);
            for (o, &v) in out[i * m..(i + 1) * m].iter_mut().zip(row) {
                *o = v - lse;
            }
        }
        let value = Tensor::new(vec![n, m], out)?;
        let rg = self.any_grad(&[x]);
        Ok(self.push(value, Op::LogSoftmax { x }, rg))
    }

    /// `sum_i weights[i] * x[i]` as a scalar; `weights` are constants.
    pub fn weighted_sum(&mut self, x: Var, weights: &Tensor) -> Result<Var> {
        same_shape(self.value(x), weights, "weighted_sum")?;
        let total = self
            .value(x)
            .data()
            .iter()
            .zip(weights.data())
            .map(|(&v, &w)| v * w)
            .sum::<f64>();
        let rg = self.any_grad(&[x]);
        Ok(self.push(
            Tensor::scalar(total),
            Op::WeightedSum {
                x,
                weights: weights.data().to_vec(),
            },
            rg,
        ))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let ones = Tensor::filled(self.value(x).shape(), 1.0);
        self.weighted_sum(x, &ones).expect("same shape")
    }

    /// Maps unconstrained `theta` to non-increasing biases:
    /// `b[0] = theta[0]`, `b[k] = b[k-1] - softplus(theta[k])`.
    pub fn ordered_biases(&mut self, theta: Var) -> Var {
        let src = self.value(theta);
        let value = Tensor::new(src.shape().to_vec(), decode_ordered_biases(src.data()))
            .expect("same shape");
        let rg = self.any_grad(&[theta]);
        self.push(value, Op::OrderedBiases { theta }, rg)
    }

    /// Reverse pass from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if !self.value(loss).is_scalar() {
            return Err(Error::Shape(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else {
                continue;
            };
            self.propagate(node, &g, &mut grads);
            grads[idx] = Some(g);
        }

        Ok(Gradients {
            grads,
            shapes: self.nodes.iter().map(|n| n.value.shape().to_vec()).collect(),
        })
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let mut acc = |var: Var, f: &mut dyn FnMut(&mut [f64])| {
            if !self.nodes[var.0].requires_grad {
                return;
            }
            let slot = grads[var.0].get_or_insert_with(|| vec![0.0; self.nodes[var.0].value.len()]);
            f(slot);
        };
        match &node.op {
            Op::Leaf => {}
            Op::Affine { x, w, b } => {
                let (n, d_in) = self.value(*x).as_matrix().expect("checked");
                let d_out = self.value(*b).len();
                let xs = self.value(*x).data();
                let ws = self.value(*w).data();
                acc(*x, &mut |dx| {
                    for i in 0..n {
                        let grow = &g[i * d_out..(i + 1) * d_out];
                        for j in 0..d_in {
                            let wrow = &ws[j * d_out..(j + 1) * d_out];
                            dx[i * d_in + j] += grow.iter().zip(wrow).map(|(a, b)| a * b).sum::<f64>();
                        }
                    }
                });
                acc(*w, &mut |dw| {
                    for i in 0..n {
                        let grow = &g[i * d_out..(i + 1) * d_out];
                        for j in 0..d_in {
                            let xv = xs[i * d_in + j];
                            if xv == 0.0 {
                                continue;
                            }
                            for (d, &gv) in dw[j * d_out..(j + 1) * d_out].iter_mut().zip(grow) {
                                *d += xv * gv;
                            }
                        }
                    }
                });
                acc(*b, &mut |db| {
                    for i in 0..n {
                        for (d, &gv) in db.iter_mut().zip(&g[i * d_out..(i + 1) * d_out]) {
                            *d += gv;
                        }
                    }
                });
            }
            Op::Unary { kind, x } => {
                let xs = self.value(*x).data();
                let ys = node.value.data();
                acc(*x, &mut |dx| {
                    for k in 0..dx.len() {
                        dx[k] += match kind {
                            UnaryKind::Sigmoid => g[k] * ys[k] * (1.0 - ys[k]),
                            // subgradient at 0 is 0
                            UnaryKind::Relu => {
                                if xs[k] > 0.0 {
                                    g[k]
                                } else {
                                    0.0
                                }
                            }
                            UnaryKind::Log => g[k] / xs[k],
                            UnaryKind::Exp => g[k] * ys[k],
                            UnaryKind::Neg => -g[k],
                        };
                    }
                });
            }
            Op::Clamp { x, lo, hi } => {
                let xs = self.value(*x).data();
                acc(*x, &mut |dx| {
                    for k in 0..dx.len() {
                        if xs[k] >= *lo && xs[k] <= *hi {
                            dx[k] += g[k];
                        }
                    }
                });
            }
            Op::ScaleShift { x, scale } => {
                acc(*x, &mut |dx| {
                    for k in 0..dx.len() {
                        dx[k] += scale * g[k];
                    }
                });
            }
            Op::Pow { x, exponent } => {
                if *exponent == 0.0 {
                    return;
                }
                let xs = self.value(*x).data();
                acc(*x, &mut |dx| {
                    for k in 0..dx.len() {
                        dx[k] += g[k] * exponent * xs[k].powf(exponent - 1.0);
                    }
                });
            }
            Op::Add { a, b } => {
                acc(*a, &mut |d| d.iter_mut().zip(g).for_each(|(d, &gv)| *d += gv));
                acc(*b, &mut |d| d.iter_mut().zip(g).for_each(|(d, &gv)| *d += gv));
            }
            Op::Sub { a, b } => {
                acc(*a, &mut |d| d.iter_mut().zip(g).for_each(|(d, &gv)| *d += gv));
                acc(*b, &mut |d| d.iter_mut().zip(g).for_each(|(d, &gv)| *d -= gv));
            }
            Op::Mul { a, b } => {
                let av = self.value(*a).data();
                let bv = self.value(*b).data();
                acc(*a, &mut |d| {
                    for k in 0..d.len() {
                        d[k] += g[k] * bv[k];
                    }
                });
                acc(*b, &mut |d| {
                    for k in 0..d.len() {
                        d[k] += g[k] * av[k];
                    }
                });
            }
            Op::BroadcastAdd { col, row } => {
                let m = self.value(*row).len();
                acc(*col, &mut |d| {
                    for (i, di) in d.iter_mut().enumerate() {
                        *di += g[i * m..(i + 1) * m].iter().sum::<f64>();
                    }
                });
                acc(*row, &mut |d| {
                    for chunk in g.chunks(m) {
                        for (dj, &gv) in d.iter_mut().zip(chunk) {
                            *dj += gv;
                        }
                    }
                });
            }
            Op::LogSoftmax { x } => {
                let (n, m) = node.value.as_matrix().expect("checked");
                let ys = node.value.data();
                acc(*x, &mut |d| {
                    for i in 0..n {
                        let gs = &g[i * m..(i + 1) * m];
                        let total: f64 = gs.iter().sum();
                        for j in 0..m {
                            d[i * m + j] += gs[j] - ys[i * m + j].exp() * total;
                        }
                    }
                });
            }
            Op::WeightedSum { x, weights } => {
                let gv = g[0];
                acc(*x, &mut |d| {
                    for (dk, &w) in d.iter_mut().zip(weights) {
                        *dk += gv * w;
                    }
                });
            }
            Op::OrderedBiases { theta } => {
                let th = self.value(*theta).data();
                acc(*theta, &mut |d| {
                    // b[k] depends on theta[0] with slope 1 and on theta[j], 1 <= j <= k,
                    // with slope -sigmoid(theta[j]).
                    let mut tail = 0.0;
                    for j in (0..d.len()).rev() {
                        tail += g[j];
                        if j == 0 {
                            d[0] += tail;
                        } else {
                            d[j] -= sigmoid(th[j]) * tail;
                        }
                    }
                });
            }
        }
    }
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

pub fn decode_ordered_biases(theta: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(theta.len());
    for (k, &t) in theta.iter().enumerate() {
        if k == 0 {
            out.push(t);
        } else {
            let prev = out[k - 1];
            out.push(prev - softplus(t));
        }
    }
    out
}

/// Inverse of [`decode_ordered_biases`] for strictly decreasing biases.
pub fn encode_ordered_biases(biases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(biases.len());
    for (k, &b) in biases.iter().enumerate() {
        if k == 0 {
            out.push(b);
        } else {
            let gap = (biases[k - 1] - b).max(1e-6);
            // softplus^{-1}(gap) = ln(exp(gap) - 1)
            out.push(gap.exp_m1().ln());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn affine_identity_and_hand_product() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::matrix(1, 2, vec![1.0, 2.0]).unwrap());
        let w = g.constant(Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap());
        let b = g.constant(Tensor::vector(vec![0.0, 0.0]));
        let y = g.affine(x, w, b).unwrap();
        assert_eq!(g.value(y).data(), &[1.0, 2.0]);

        let x = g.constant(Tensor::matrix(1, 2, vec![1.0, 1.0]).unwrap());
        let w = g.constant(Tensor::matrix(2, 1, vec![1.0, 1.0]).unwrap());
        let b = g.constant(Tensor::vector(vec![1.0]));
        let y = g.affine(x, w, b).unwrap();
        assert_eq!(g.value(y).data(), &[3.0]);
    }

    #[test]
    fn affine_zero_weights_broadcasts_bias() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::matrix(3, 2, vec![1.0, -2.0, 0.5, 4.0, 7.0, 1.0]).unwrap());
        let w = g.constant(Tensor::zeros(&[2, 2]));
        let b = g.constant(Tensor::vector(vec![2.5, -1.0]));
        let y = g.affine(x, w, b).unwrap();
        assert_eq!(g.value(y).data(), &[2.5, -1.0, 2.5, -1.0, 2.5, -1.0]);
    }

    #[test]
    fn affine_rejects_bad_shapes() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::zeros(&[2, 3]));
        let w = g.constant(Tensor::zeros(&[2, 2]));
        let b = g.constant(Tensor::zeros(&[2]));
        assert!(matches!(g.affine(x, w, b), Err(Error::Shape(_))));
    }

    #[test]
    fn elementwise_values() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::vector(vec![0.0, -3.0, 1.0]));
        let s = g.sigmoid(x).unwrap();
        let r = g.relu(x).unwrap();
        let e = g.exp(x).unwrap();
        assert_eq!(g.value(s).data()[0], 0.5);
        assert_eq!(g.value(r).data()[1], 0.0);
        close(g.value(e).data()[2], std::f64::consts::E, 1e-15);
        assert!(matches!(g.log(x), Err(Error::Numerical(_))));
    }

    #[test]
    fn backward_of_sum_is_ones() {
        let mut g = Graph::new();
        let x = g.param(Tensor::new(vec![2, 3], vec![1.0, -2.0, 3.0, 0.5, 0.0, 9.0]).unwrap());
        let s = g.sum(x);
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(x).data(), &[1.0; 6]);
    }

    #[test]
    fn backward_sigmoid_at_zero() {
        let mut g = Graph::new();
        let w = g.param(Tensor::scalar(0.0));
        let s = g.sigmoid(w).unwrap();
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(w).data(), &[0.25]);
    }

    #[test]
    fn unreachable_param_gets_zero_gradient() {
        let mut g = Graph::new();
        let p = g.param(Tensor::vector(vec![1.0, 2.0]));
        let q = g.param(Tensor::scalar(3.0));
        let l = g.exp(q).unwrap();
        let grads = g.backward(l).unwrap();
        assert_eq!(grads.get(p).data(), &[0.0, 0.0]);
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let mut g = Graph::new();
        let p = g.param(Tensor::vector(vec![1.0, 2.0]));
        assert!(matches!(g.backward(p), Err(Error::Shape(_))));
    }

    #[test]
    fn relu_subgradient_at_zero_is_zero() {
        let mut g = Graph::new();
        let p = g.param(Tensor::vector(vec![0.0, 1.0, -1.0]));
        let r = g.relu(p).unwrap();
        let s = g.sum(r);
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(p).data(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn ordered_biases_round_trip() {
        let b = vec![1.5, 0.2, -0.7, -3.0];
        let theta = encode_ordered_biases(&b);
        let back = decode_ordered_biases(&theta);
        for (x, y) in b.iter().zip(&back) {
            close(*x, *y, 1e-12);
        }
    }

    #[test]
    fn pow_zero_exponent_has_no_gradient() {
        let mut g = Graph::new();
        let p = g.param(Tensor::vector(vec![0.3, 0.9]));
        let y = g.pow(p, 0.0).unwrap();
        let s = g.sum(y);
        assert_eq!(g.value(s).item(), Some(2.0));
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(p).data(), &[0.0, 0.0]);
    }
}
