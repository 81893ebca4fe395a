//! Reverse-mode differentiation over a fixed set of matrix operations.
//!
//! A [`Tape`] records every operation applied to its [`Var`]s together with
//! the operand values the backward pass needs. [`Tape::backward`] walks the
//! record once, newest node first, accumulating gradients additively.

use std::sync::Arc;

use super::matrix::{gemm, gemm_window, sigmoid, tanh, MatMut, MatRef, Matrix};
use crate::error::{Error, Result};

/// Probability floor applied before the logarithm in [`Tape::cross_entropy`].
pub const PROB_FLOOR: f64 = 1e-12;

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Fixed square operators applied block-wise by [`Tape::propagate`].
///
/// For graph convolution these are the Chebyshev matrices `T_k(L̃)`; for the
/// grid baseline they are the shift stencils of a 2-D convolution kernel.
#[derive(Debug)]
pub struct OperatorStack {
    ops: Vec<Matrix>,
    identity: Vec<bool>,
    size: usize,
}

impl OperatorStack {
    pub fn new(ops: Vec<Matrix>) -> Result<Self> {
        let size = ops.first().map_or(0, Matrix::rows);
        if ops.is_empty() {
            return Err(Error::invalid("operator stack is empty"));
        }
        for op in &ops {
            if op.shape() != (size, size) {
                return Err(Error::Shape {
                    op: "operator stack",
                    left: (size, size),
                    right: op.shape(),
                });
            }
        }
        let eye = Matrix::identity(size);
        let identity = ops.iter().map(|m| *m == eye).collect();
        Ok(OperatorStack {
            ops,
            identity,
            size,
        })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Side length of every operator.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn ops(&self) -> &[Matrix] {
        &self.ops
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Hadamard(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    SoftmaxRows(Var),
    Scale(Var, f64),
    ConcatRows(Vec<Var>),
    ConcatCols(Vec<Var>),
    SliceCols(Var, usize),
    SelectRows(Var, Arc<[usize]>),
    Propagate(Var, Arc<OperatorStack>),
    Sum(Var),
    CrossEntropy(Var, Arc<[usize]>),
    GateActivations(Var),
    CellUpdate(Var, Option<Var>),
    /// Keeps `tanh(c)` for the reverse pass.
    CellOutput(Var, Var, Matrix),
}

#[derive(Debug)]
struct Node {
    value: Matrix,
    op: Op,
    requires_grad: bool,
}

/// Operation record for one forward pass. Confined to a single thread.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    consumed: bool,
}

/// Gradients produced by [`Tape::backward`], indexed by [`Var`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    /// Gradient of the loss with respect to `var`, if it requires one.
    pub fn get(&self, var: Var) -> Option<&Matrix> {
        self.grads.get(var.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, var: Var) -> Option<Matrix> {
        self.grads.get_mut(var.0).and_then(Option::take)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Registers a differentiable leaf.
    pub fn param(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Registers a leaf that receives no gradient.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, var: Var) -> &Matrix {
        &self.nodes[var.0].value
    }

    fn push(&mut self, value: Matrix, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    fn unary(&mut self, a: Var, value: Matrix, op: Op) -> Var {
        let rg = self.needs(&[a]);
        self.push(value, op, rg)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        let rg = self.needs(&[a, b]);
        Ok(self.push(value, Op::MatMul(a, b), rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).add(self.value(b))?;
        let rg = self.needs(&[a, b]);
        Ok(self.push(value, Op::Add(a, b), rg))
    }

    /// Adds the `1 x cols` row `bias` to every row of `a`.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (m, b) = (self.value(a), self.value(bias));
        if b.rows() != 1 || b.cols() != m.cols() {
            return Err(Error::Shape {
                op: "add_row",
                left: m.shape(),
                right: b.shape(),
            });
        }
        let mut value = m.clone();
        let cols = value.cols();
        for row in value.data_mut().chunks_exact_mut(cols.max(1)) {
            for (v, bv) in row.iter_mut().zip(b.data()) {
                *v += bv;
            }
        }
        let rg = self.needs(&[a, bias]);
        Ok(self.push(value, Op::AddRow(a, bias), rg))
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).hadamard(self.value(b))?;
        let rg = self.needs(&[a, b]);
        Ok(self.push(value, Op::Hadamard(a, b), rg))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).sigmoid();
        self.unary(a, value, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).tanh();
        self.unary(a, value, Op::Tanh(a))
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let value = self.value(a).softmax_rows();
        self.unary(a, value, Op::SoftmaxRows(a))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let value = self.value(a).scale(factor);
        self.unary(a, value, Op::Scale(a, factor))
    }

    /// Sum of all entries as a `1 x 1` node.
    pub fn sum(&mut self, a: Var) -> Var {
        let value = Matrix::filled(1, 1, self.value(a).sum());
        self.unary(a, value, Op::Sum(a))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::invalid("concat_rows of nothing"))?;
        let cols = self.value(*first).cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            let m = self.value(*p);
            if m.cols() != cols {
                return Err(Error::Shape {
                    op: "concat_rows",
                    left: self.value(*first).shape(),
                    right: m.shape(),
                });
            }
            rows += m.rows();
            data.extend_from_slice(m.data());
        }
        let value = Matrix::new(rows, cols, data)?;
        let rg = self.needs(parts);
        Ok(self.push(value, Op::ConcatRows(parts.to_vec()), rg))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::invalid("concat_cols of nothing"))?;
        let rows = self.value(*first).rows();
        let mut cols = 0;
        for p in parts {
            let m = self.value(*p);
            if m.rows() != rows {
                return Err(Error::Shape {
                    op: "concat_cols",
                    left: self.value(*first).shape(),
                    right: m.shape(),
                });
            }
            cols += m.cols();
        }
        let mut value = Matrix::zeros(rows, cols);
        let mut offset = 0;
        for p in parts {
            let m = self.value(*p);
            let w = m.cols();
            for r in 0..rows {
                value.row_mut(r)[offset..offset + w].copy_from_slice(m.row(r));
            }
            offset += w;
        }
        let rg = self.needs(parts);
        Ok(self.push(value, Op::ConcatCols(parts.to_vec()), rg))
    }

    /// Columns `start..start + width` of `a`.
    pub fn slice_cols(&mut self, a: Var, start: usize, width: usize) -> Result<Var> {
        let m = self.value(a);
        if start + width > m.cols() {
            return Err(Error::Shape {
                op: "slice_cols",
                left: m.shape(),
                right: (start, width),
            });
        }
        let value = Matrix::from_fn(m.rows(), width, |r, c| m.get(r, start + c));
        Ok(self.unary(a, value, Op::SliceCols(a, start)))
    }

    /// Row `i` of the result is row `indices[i]` of `a`.
    pub fn select_rows(&mut self, a: Var, indices: Arc<[usize]>) -> Result<Var> {
        let m = self.value(a);
        if let Some(&bad) = indices.iter().find(|&&i| i >= m.rows()) {
            return Err(Error::Shape {
                op: "select_rows",
                left: m.shape(),
                right: (bad, 0),
            });
        }
        let mut data = Vec::with_capacity(indices.len() * m.cols());
        for &i in indices.iter() {
            data.extend_from_slice(m.row(i));
        }
        let value = Matrix::new(indices.len(), m.cols(), data)?;
        Ok(self.unary(a, value, Op::SelectRows(a, indices)))
    }

    /// Applies every operator of `stack` to each consecutive block of
    /// `stack.size()` rows of `x`, laying the results side by side:
    /// block `b` of the output is `[P_0 x_b | P_1 x_b | ...]`.
    pub fn propagate(&mut self, x: Var, stack: Arc<OperatorStack>) -> Result<Var> {
        let m = self.value(x);
        let size = stack.size();
        if size == 0 || !m.rows().is_multiple_of(size) {
            return Err(Error::Shape {
                op: "propagate",
                left: m.shape(),
                right: (size, size),
            });
        }
        let (rows, c) = m.shape();
        let width = stack.len() * c;
        let mut value = Matrix::zeros(rows, width);
        for b in 0..rows / size {
            for (k, op) in stack.ops().iter().enumerate() {
                if stack.identity[k] {
                    for r in 0..size {
                        let row = b * size + r;
                        value.row_mut(row)[k * c..(k + 1) * c].copy_from_slice(m.row(row));
                    }
                    continue;
                }
                gemm_window(
                    1.0,
                    MatRef::normal(op),
                    MatRef::window(m.data(), c, b * size, size, 0, c),
                    0.0,
                    MatMut::window(value.data_mut(), width, b * size, size, k * c, c),
                );
            }
        }
        Ok(self.unary(x, value, Op::Propagate(x, stack)))
    }

    /// LSTM gate nonlinearities on pre-activations laid out as four
    /// equal column blocks `[i | f | g | o]`: sigmoid on `i`, `f`, `o` and
    /// tanh on `g`.
    pub fn gate_activations(&mut self, pre: Var) -> Result<Var> {
        let m = self.value(pre);
        if !m.cols().is_multiple_of(4) {
            return Err(Error::Shape {
                op: "gate_activations",
                left: m.shape(),
                right: (m.rows(), 4 * (m.cols() / 4)),
            });
        }
        let h = m.cols() / 4;
        let mut value = m.clone();
        for row in value.data_mut().chunks_exact_mut(4 * h.max(1)) {
            let (ifg, o) = row.split_at_mut(3 * h);
            let (if_, g) = ifg.split_at_mut(2 * h);
            if_.iter_mut().chain(o.iter_mut()).for_each(|v| *v = sigmoid(*v));
            g.iter_mut().for_each(|v| *v = tanh(*v));
        }
        Ok(self.unary(pre, value, Op::GateActivations(pre)))
    }

    /// `c = f ⊙ c_prev + i ⊙ g` from activated gates; `None` is a zero
    /// previous cell.
    pub fn cell_update(&mut self, gates: Var, c_prev: Option<Var>) -> Result<Var> {
        let a = self.value(gates);
        let (rows, h) = (a.rows(), a.cols() / 4);
        if let Some(c) = c_prev {
            if self.value(c).shape() != (rows, h) || !a.cols().is_multiple_of(4) {
                return Err(Error::Shape {
                    op: "cell_update",
                    left: a.shape(),
                    right: self.value(c).shape(),
                });
            }
        }
        let mut value = Matrix::zeros(rows, h);
        for r in 0..rows {
            let gr = a.row(r);
            let (i, f, g) = (&gr[..h], &gr[h..2 * h], &gr[2 * h..3 * h]);
            let out = value.row_mut(r);
            for j in 0..h {
                out[j] = i[j] * g[j];
            }
            if let Some(c) = c_prev {
                for (j, cv) in self.value(c).row(r).iter().enumerate() {
                    out[j] += f[j] * cv;
                }
            }
        }
        let mut parents = vec![gates];
        parents.extend(c_prev);
        let rg = self.needs(&parents);
        Ok(self.push(value, Op::CellUpdate(gates, c_prev), rg))
    }

    /// `h = o ⊙ tanh(c)` from activated gates and the new cell.
    pub fn cell_output(&mut self, gates: Var, c: Var) -> Result<Var> {
        let (a, cv) = (self.value(gates), self.value(c));
        let h = a.cols() / 4;
        if cv.shape() != (a.rows(), h) || a.cols() % 4 != 0 {
            return Err(Error::Shape {
                op: "cell_output",
                left: a.shape(),
                right: cv.shape(),
            });
        }
        let squashed = cv.tanh();
        let mut value = Matrix::zeros(a.rows(), h);
        for r in 0..a.rows() {
            let o = &a.row(r)[3 * h..];
            for ((out, ov), tv) in value.row_mut(r).iter_mut().zip(o).zip(squashed.row(r)) {
                *out = ov * tv;
            }
        }
        let rg = self.needs(&[gates, c]);
        Ok(self.push(value, Op::CellOutput(gates, c, squashed), rg))
    }

    /// Mean over rows of `-ln(max(p[r, target_r], PROB_FLOOR))`.
    pub fn cross_entropy(&mut self, probs: Var, targets: Arc<[usize]>) -> Result<Var> {
        let p = self.value(probs);
        if targets.len() != p.rows() || p.rows() == 0 {
            return Err(Error::Shape {
                op: "cross_entropy",
                left: p.shape(),
                right: (targets.len(), 1),
            });
        }
        if let Some(&bad) = targets.iter().find(|&&t| t >= p.cols()) {
            return Err(Error::invalid(format!(
                "target class {bad} out of range for {} classes",
                p.cols()
            )));
        }
        let loss = cross_entropy_value(p, &targets);
        let value = Matrix::filled(1, 1, loss);
        Ok(self.unary(probs, value, Op::CrossEntropy(probs, targets)))
    }

    /// Reverse pass from the scalar `loss`. May be called once per tape.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients> {
        if self.consumed {
            return Err(Error::TapeReused);
        }
        let shape = self.value(loss).shape();
        if shape != (1, 1) {
            return Err(Error::NonScalarLoss {
                rows: shape.0,
                cols: shape.1,
            });
        }
        self.consumed = true;

        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Matrix::ones(1, 1));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[idx].take() else {
                continue;
            };
            self.backprop_node(idx, &g, &mut grads);
        }

        for (i, node) in self.nodes.iter().enumerate() {
            if node.requires_grad && matches!(node.op, Op::Leaf) && grads[i].is_none() {
                let (r, c) = node.value.shape();
                grads[i] = Some(Matrix::zeros(r, c));
            }
        }
        Ok(Gradients { grads })
    }

    fn backprop_node(&self, idx: usize, g: &Matrix, grads: &mut [Option<Matrix>]) {
        let node = &self.nodes[idx];
        let out = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                if self.wants(*a) {
                    let slot = slot(grads, *a, av.shape());
                    gemm(1.0, MatRef::normal(g), MatRef::transposed(bv), 1.0, slot);
                }
                if self.wants(*b) {
                    let slot = slot(grads, *b, bv.shape());
                    gemm(1.0, MatRef::transposed(av), MatRef::normal(g), 1.0, slot);
                }
            }
            Op::Add(a, b) => {
                for v in [*a, *b] {
                    if self.wants(v) {
                        axpy(slot(grads, v, g.shape()), g.data(), 1.0);
                    }
                }
            }
            Op::AddRow(a, bias) => {
                if self.wants(*a) {
                    axpy(slot(grads, *a, g.shape()), g.data(), 1.0);
                }
                if self.wants(*bias) {
                    let cols = g.cols();
                    let s = slot(grads, *bias, (1, cols));
                    for row in g.data().chunks_exact(cols.max(1)) {
                        for (acc, v) in s.data_mut().iter_mut().zip(row) {
                            *acc += v;
                        }
                    }
                }
            }
            Op::Hadamard(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                if self.wants(*a) {
                    let s = slot(grads, *a, av.shape());
                    for ((acc, gv), o) in s.data_mut().iter_mut().zip(g.data()).zip(bv.data()) {
                        *acc += gv * o;
                    }
                }
                if self.wants(*b) {
                    let s = slot(grads, *b, bv.shape());
                    for ((acc, gv), o) in s.data_mut().iter_mut().zip(g.data()).zip(av.data()) {
                        *acc += gv * o;
                    }
                }
            }
            Op::Sigmoid(a) => {
                let s = slot(grads, *a, out.shape());
                for ((acc, gv), y) in s.data_mut().iter_mut().zip(g.data()).zip(out.data()) {
                    *acc += gv * y * (1.0 - y);
                }
            }
            Op::Tanh(a) => {
                let s = slot(grads, *a, out.shape());
                for ((acc, gv), y) in s.data_mut().iter_mut().zip(g.data()).zip(out.data()) {
                    *acc += gv * (1.0 - y * y);
                }
            }
            Op::SoftmaxRows(a) => {
                let cols = out.cols();
                let s = slot(grads, *a, out.shape());
                for r in 0..out.rows() {
                    let (y, gr) = (out.row(r), g.row(r));
                    let dot: f64 = y.iter().zip(gr).map(|(a, b)| a * b).sum();
                    let dst = &mut s.data_mut()[r * cols..(r + 1) * cols];
                    for ((acc, yv), gv) in dst.iter_mut().zip(y).zip(gr) {
                        *acc += yv * (gv - dot);
                    }
                }
            }
            Op::Scale(a, f) => {
                axpy(slot(grads, *a, g.shape()), g.data(), *f);
            }
            Op::Sum(a) => {
                let gv = g.data()[0];
                let s = slot(grads, *a, self.value(*a).shape());
                for acc in s.data_mut() {
                    *acc += gv;
                }
            }
            Op::ConcatRows(parts) => {
                let cols = g.cols();
                let mut offset = 0;
                for p in parts {
                    let shape = self.value(*p).shape();
                    let len = shape.0 * cols;
                    if self.wants(*p) {
                        axpy(slot(grads, *p, shape), &g.data()[offset..offset + len], 1.0);
                    }
                    offset += len;
                }
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for p in parts {
                    let shape = self.value(*p).shape();
                    if self.wants(*p) {
                        let s = slot(grads, *p, shape);
                        for r in 0..shape.0 {
                            let src = &g.row(r)[offset..offset + shape.1];
                            for (acc, v) in s.row_mut(r).iter_mut().zip(src) {
                                *acc += v;
                            }
                        }
                    }
                    offset += shape.1;
                }
            }
            Op::SliceCols(a, start) => {
                let shape = self.value(*a).shape();
                let s = slot(grads, *a, shape);
                for r in 0..g.rows() {
                    let dst = &mut s.row_mut(r)[*start..*start + g.cols()];
                    for (acc, v) in dst.iter_mut().zip(g.row(r)) {
                        *acc += v;
                    }
                }
            }
            Op::SelectRows(a, indices) => {
                let shape = self.value(*a).shape();
                let s = slot(grads, *a, shape);
                for (i, &src) in indices.iter().enumerate() {
                    for (acc, v) in s.row_mut(src).iter_mut().zip(g.row(i)) {
                        *acc += v;
                    }
                }
            }
            Op::Propagate(x, stack) => {
                let shape = self.value(*x).shape();
                let (rows, c) = shape;
                let size = stack.size();
                let width = g.cols();
                let s = slot(grads, *x, shape);
                for b in 0..rows / size {
                    for (k, op) in stack.ops().iter().enumerate() {
                        if stack.identity[k] {
                            for r in 0..size {
                                let row = b * size + r;
                                let src = &g.row(row)[k * c..(k + 1) * c];
                                for (acc, v) in s.row_mut(row).iter_mut().zip(src) {
                                    *acc += v;
                                }
                            }
                            continue;
                        }
                        gemm_window(
                            1.0,
                            MatRef::transposed(op),
                            MatRef::window(g.data(), width, b * size, size, k * c, c),
                            1.0,
                            MatMut::window(s.data_mut(), c, b * size, size, 0, c),
                        );
                    }
                }
            }
            Op::GateActivations(pre) => {
                let h = out.cols() / 4;
                let s = slot(grads, *pre, out.shape());
                for r in 0..out.rows() {
                    let (y, gr) = (out.row(r), g.row(r));
                    let dst = s.row_mut(r);
                    for j in 0..4 * h {
                        let d = if (2 * h..3 * h).contains(&j) {
                            1.0 - y[j] * y[j]
                        } else {
                            y[j] * (1.0 - y[j])
                        };
                        dst[j] += gr[j] * d;
                    }
                }
            }
            Op::CellUpdate(gates, c_prev) => {
                let a = self.value(*gates);
                let h = g.cols();
                if self.wants(*gates) {
                    let s = slot(grads, *gates, a.shape());
                    for r in 0..g.rows() {
                        let (ar, gr) = (a.row(r), g.row(r));
                        let dst = s.row_mut(r);
                        for j in 0..h {
                            dst[j] += gr[j] * ar[2 * h + j];
                            dst[2 * h + j] += gr[j] * ar[j];
                        }
                        if let Some(c) = c_prev {
                            for (j, cv) in self.value(*c).row(r).iter().enumerate() {
                                dst[h + j] += gr[j] * cv;
                            }
                        }
                    }
                }
                if let Some(c) = c_prev.filter(|c| self.wants(*c)) {
                    let s = slot(grads, c, g.shape());
                    for r in 0..g.rows() {
                        let f = &a.row(r)[h..2 * h];
                        for ((acc, gv), fv) in s.row_mut(r).iter_mut().zip(g.row(r)).zip(f) {
                            *acc += gv * fv;
                        }
                    }
                }
            }
            Op::CellOutput(gates, c, squashed) => {
                let a = self.value(*gates);
                let h = g.cols();
                if self.wants(*gates) {
                    let s = slot(grads, *gates, a.shape());
                    for r in 0..g.rows() {
                        let dst = &mut s.row_mut(r)[3 * h..];
                        for ((acc, gv), tv) in dst.iter_mut().zip(g.row(r)).zip(squashed.row(r)) {
                            *acc += gv * tv;
                        }
                    }
                }
                if self.wants(*c) {
                    let s = slot(grads, *c, g.shape());
                    for r in 0..g.rows() {
                        let o = &a.row(r)[3 * h..];
                        let it = s.row_mut(r).iter_mut().zip(g.row(r)).zip(o).zip(squashed.row(r));
                        for (((acc, gv), ov), tv) in it {
                            *acc += gv * ov * (1.0 - tv * tv);
                        }
                    }
                }
            }
            Op::CrossEntropy(p, targets) => {
                let pv = self.value(*p);
                let scale = g.data()[0] / pv.rows() as f64;
                let s = slot(grads, *p, pv.shape());
                for (r, &t) in targets.iter().enumerate() {
                    let prob = pv.get(r, t);
                    if prob > PROB_FLOOR {
                        let cur = s.get(r, t);
                        s.set(r, t, cur - scale / prob);
                    }
                }
            }
        }
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }
}

fn slot(grads: &mut [Option<Matrix>], v: Var, shape: (usize, usize)) -> &mut Matrix {
    grads[v.0].get_or_insert_with(|| Matrix::zeros(shape.0, shape.1))
}

fn axpy(dst: &mut Matrix, src: &[f64], alpha: f64) {
    for (d, s) in dst.data_mut().iter_mut().zip(src) {
        *d += alpha * s;
    }
}

pub(crate) fn cross_entropy_value(probs: &Matrix, targets: &[usize]) -> f64 {
    let total: f64 = targets
        .iter()
        .enumerate()
        .map(|(r, &t)| -probs.get(r, t).max(PROB_FLOOR).ln())
        .sum();
    total / targets.len() as f64
}
