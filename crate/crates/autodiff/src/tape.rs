//! Reverse-mode differentiation over a linear tape of dense tensor operations.
//!
//! Every operation appends one node whose inputs already live on the tape, so
//! node order is a topological order and `backward` is a single reverse sweep.
//! Nodes that do not depend on any parameter are never differentiated.

use std::sync::Arc;

use crate::error::{AutodiffError, Result};
use crate::tensor::Tensor;

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Param,
    Constant,
    MatMul(Var, Var),
    FixedMatMul(Arc<Tensor>, Var),
    Transpose(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    AddRow(Var, Var),
    MulCol(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Exp(Var),
    Sigmoid(Var),
    Clamp(Var, f64, f64),
    Dot(Var, Var),
    RowDot(Var, Var),
    Sum(Var),
    SoftmaxRows(Var),
    Column(Var, usize),
    ConcatCols(Vec<Var>),
    GatherRows(Var, Arc<[usize]>),
    ScatterAddRows(Var, Arc<[usize]>),
}

#[derive(Clone, Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Recorded computation. Single-threaded; build one per forward pass.
#[derive(Default, Debug)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients produced by [`Tape::backward`], indexed by [`Var`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, var: Var) -> Option<&Tensor> {
        self.grads.get(var.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, var: Var) -> Option<Tensor> {
        self.grads.get_mut(var.0).and_then(Option::take)
    }
}

fn mismatch(op: &'static str, a: &Tensor, b: &Tensor) -> AutodiffError {
    AutodiffError::ShapeMismatch {
        op,
        lhs: a.shape().to_vec(),
        rhs: b.shape().to_vec(),
    }
}

fn not_matrix(op: &'static str, t: &Tensor) -> AutodiffError {
    AutodiffError::NotMatrix {
        op,
        shape: t.shape().to_vec(),
    }
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::new(a.shape().to_vec(), data).expect("same shape")
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn gather_rows(src: &Tensor, index: &[usize]) -> Tensor {
    let cols = src.shape()[1];
    let mut out = Vec::with_capacity(index.len() * cols);
    for &i in index {
        out.extend_from_slice(src.row(i));
    }
    Tensor::matrix(index.len(), cols, out).expect("consistent")
}

fn scatter_add_rows(src: &Tensor, index: &[usize], rows: usize) -> Tensor {
    let cols = src.shape()[1];
    let mut out = vec![0.0; rows * cols];
    for (r, &i) in index.iter().enumerate() {
        for (o, v) in out[i * cols..(i + 1) * cols].iter_mut().zip(src.row(r)) {
            *o += v;
        }
    }
    Tensor::matrix(rows, cols, out).expect("consistent")
}

/// `x^T g`, skipping zero entries of `x` row by row.
fn transpose_times(x: &Tensor, g: &Tensor) -> Result<Tensor> {
    let (n, k) = x.dims2()?;
    let (_, m) = g.dims2()?;
    let mut out = vec![0.0; k * m];
    for i in 0..n {
        let g_row = g.row(i);
        for (p, &xv) in x.row(i).iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            for (o, gv) in out[p * m..(p + 1) * m].iter_mut().zip(g_row) {
                *o += xv * gv;
            }
        }
    }
    Tensor::matrix(k, m, out)
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

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    pub fn requires_grad(&self, var: Var) -> bool {
        self.nodes[var.0].requires_grad
    }

    fn push(&mut self, value: Tensor, op: Op, inputs: &[Var]) -> Var {
        let requires_grad = match op {
            Op::Param => true,
            Op::Constant => false,
            _ => inputs.iter().any(|v| self.nodes[v.0].requires_grad),
        };
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Param, &[])
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Constant, &[])
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.push(value, Op::MatMul(a, b), &[a, b]))
    }

    /// `lhs * b` where `lhs` is a shared constant (e.g. the feature matrix)
    /// that is referenced rather than copied onto the tape.
    pub fn matmul_fixed(&mut self, lhs: &Arc<Tensor>, b: Var) -> Result<Var> {
        let value = lhs.matmul(self.value(b))?;
        Ok(self.push(value, Op::FixedMatMul(Arc::clone(lhs), b), &[b]))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a).transposed()?;
        Ok(self.push(value, Op::Transpose(a), &[a]))
    }

    fn binary(
        &mut self,
        name: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(mismatch(name, x, y));
        }
        let value = zip_map(x, y, f);
        Ok(self.push(value, op, &[a, b]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    /// Elementwise quotient.
    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("div", a, b, |x, y| x / y, Op::Div(a, b))
    }

    /// Adds a `1 x c` row to every row of an `r x c` matrix.
    pub fn add_row(&mut self, m: Var, row: Var) -> Result<Var> {
        let (x, b) = (self.value(m), self.value(row));
        let (r, c) = x.dims2().map_err(|_| not_matrix("add_row", x))?;
        if b.shape() != [1, c] {
            return Err(mismatch("add_row", x, b));
        }
        let mut data = x.data().to_vec();
        for i in 0..r {
            for (o, v) in data[i * c..(i + 1) * c].iter_mut().zip(b.data()) {
                *o += v;
            }
        }
        let value = Tensor::matrix(r, c, data)?;
        Ok(self.push(value, Op::AddRow(m, row), &[m, row]))
    }

    /// Scales row `i` of an `r x c` matrix by entry `i` of an `r x 1` column.
    pub fn mul_col(&mut self, m: Var, col: Var) -> Result<Var> {
        let (x, w) = (self.value(m), self.value(col));
        let (r, c) = x.dims2().map_err(|_| not_matrix("mul_col", x))?;
        if w.shape() != [r, 1] {
            return Err(mismatch("mul_col", x, w));
        }
        let mut data = x.data().to_vec();
        for i in 0..r {
            let s = w.data()[i];
            data[i * c..(i + 1) * c].iter_mut().for_each(|v| *v *= s);
        }
        let value = Tensor::matrix(r, c, data)?;
        Ok(self.push(value, Op::MulCol(m, col), &[m, col]))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let value = self.value(a).map(|v| v * factor);
        self.push(value, Op::Scale(a, factor), &[a])
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|v| v.max(0.0));
        self.push(value, Op::Relu(a), &[a])
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::exp);
        self.push(value, Op::Exp(a), &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(sigmoid);
        self.push(value, Op::Sigmoid(a), &[a])
    }

    /// Clamps into `[lo, hi]`; the gradient is zero outside the interval.
    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Var {
        let value = self.value(a).map(|v| v.clamp(lo, hi));
        self.push(value, Op::Clamp(a, lo, hi), &[a])
    }

    /// Full inner product of two equally shaped tensors, as a scalar.
    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(mismatch("dot", x, y));
        }
        let s = x.data().iter().zip(y.data()).map(|(p, q)| p * q).sum();
        Ok(self.push(Tensor::scalar(s), Op::Dot(a, b), &[a, b]))
    }

    /// Per-row inner products of two `r x c` matrices, as an `r x 1` column.
    pub fn row_dot(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        let (r, _) = x.dims2().map_err(|_| not_matrix("row_dot", x))?;
        if x.shape() != y.shape() {
            return Err(mismatch("row_dot", x, y));
        }
        let data = (0..r)
            .map(|i| x.row(i).iter().zip(y.row(i)).map(|(p, q)| p * q).sum())
            .collect();
        Ok(self.push(Tensor::column(data), Op::RowDot(a, b), &[a, b]))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a), &[a])
    }

    /// Softmax along each row, stabilized by subtracting the row maximum.
    pub fn softmax_rows(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        let (r, c) = x.dims2().map_err(|_| not_matrix("softmax_rows", x))?;
        let mut data = x.data().to_vec();
        for i in 0..r {
            let row = &mut data[i * c..(i + 1) * c];
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                total += *v;
            }
            row.iter_mut().for_each(|v| *v /= total);
        }
        let value = Tensor::matrix(r, c, data)?;
        Ok(self.push(value, Op::SoftmaxRows(a), &[a]))
    }

    /// Column `j` of a matrix as an `r x 1` column.
    pub fn column(&mut self, a: Var, j: usize) -> Result<Var> {
        let x = self.value(a);
        let (r, c) = x.dims2().map_err(|_| not_matrix("column", x))?;
        if j >= c {
            return Err(AutodiffError::IndexOutOfRange {
                op: "column",
                index: j,
                bound: c,
            });
        }
        let data = (0..r).map(|i| x.data()[i * c + j]).collect();
        Ok(self.push(Tensor::column(data), Op::Column(a, j), &[a]))
    }

    /// Horizontal concatenation of matrices with equal row counts.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts.first().map(|&v| self.value(v)).ok_or_else(|| {
            AutodiffError::ShapeMismatch {
                op: "concat_cols",
                lhs: Vec::new(),
                rhs: Vec::new(),
            }
        })?;
        let (rows, _) = first.dims2().map_err(|_| not_matrix("concat_cols", first))?;
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let t = self.value(p);
            let (r, c) = t.dims2().map_err(|_| not_matrix("concat_cols", t))?;
            if r != rows {
                return Err(mismatch("concat_cols", first, t));
            }
            widths.push(c);
        }
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(rows * total);
        for i in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.value(p).row(i));
            }
        }
        let value = Tensor::matrix(rows, total, data)?;
        Ok(self.push(value, Op::ConcatCols(parts.to_vec()), parts))
    }

    /// Selects rows of `a` by index (repeats allowed).
    pub fn gather_rows(&mut self, a: Var, index: Arc<[usize]>) -> Result<Var> {
        let x = self.value(a);
        let (r, _) = x.dims2().map_err(|_| not_matrix("gather_rows", x))?;
        if let Some(&bad) = index.iter().find(|&&i| i >= r) {
            return Err(AutodiffError::IndexOutOfRange {
                op: "gather_rows",
                index: bad,
                bound: r,
            });
        }
        let value = gather_rows(x, &index);
        Ok(self.push(value, Op::GatherRows(a, index), &[a]))
    }

    /// Sums row `i` of `a` into output row `index[i]` of a `rows x c` matrix.
    pub fn scatter_add_rows(&mut self, a: Var, index: Arc<[usize]>, rows: usize) -> Result<Var> {
        let x = self.value(a);
        let (r, _) = x.dims2().map_err(|_| not_matrix("scatter_add_rows", x))?;
        if r != index.len() {
            return Err(AutodiffError::ShapeMismatch {
                op: "scatter_add_rows",
                lhs: x.shape().to_vec(),
                rhs: vec![index.len()],
            });
        }
        if let Some(&bad) = index.iter().find(|&&i| i >= rows) {
            return Err(AutodiffError::IndexOutOfRange {
                op: "scatter_add_rows",
                index: bad,
                bound: rows,
            });
        }
        let value = scatter_add_rows(x, &index, rows);
        Ok(self.push(value, Op::ScatterAddRows(a, index), &[a]))
    }

    /// Reverse sweep from a scalar `loss`. Every parameter leaf receives a
    /// gradient, zero-filled when the loss does not depend on it.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let root = self.value(loss);
        if root.len() != 1 {
            return Err(AutodiffError::NonScalarLoss(root.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::filled(root.shape(), 1.0));

        for id in (0..=loss.0).rev() {
            let node = &self.nodes[id];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[id].take() else {
                continue;
            };
            self.propagate(node, &g, &mut grads)?;
            grads[id] = Some(g);
        }

        for (id, node) in self.nodes.iter().enumerate() {
            match node.op {
                Op::Param => {
                    if grads[id].is_none() {
                        grads[id] = Some(Tensor::zeros(node.value.shape()));
                    }
                }
                _ => {
                    if id != loss.0 {
                        grads[id] = None;
                    }
                }
            }
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], var: Var, delta: Tensor) {
        if !self.nodes[var.0].requires_grad {
            return;
        }
        match &mut grads[var.0] {
            Some(existing) => existing.add_assign(&delta),
            slot => *slot = Some(delta),
        }
    }

    fn wants(&self, var: Var) -> bool {
        self.nodes[var.0].requires_grad
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) -> Result<()> {
        let y = &node.value;
        match &node.op {
            Op::Param | Op::Constant => {}
            Op::MatMul(a, b) => {
                let (x, w) = (self.value(*a), self.value(*b));
                if self.wants(*a) {
                    let da = g.matmul(&w.transposed()?)?;
                    self.accumulate(grads, *a, da);
                }
                if self.wants(*b) {
                    self.accumulate(grads, *b, transpose_times(x, g)?);
                }
            }
            Op::FixedMatMul(x, b) => self.accumulate(grads, *b, transpose_times(x, g)?),
            Op::Transpose(a) => self.accumulate(grads, *a, g.transposed()?),
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.clone());
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.map(|v| -v));
            }
            Op::Mul(a, b) => {
                let (x, w) = (self.value(*a), self.value(*b));
                if self.wants(*a) {
                    self.accumulate(grads, *a, zip_map(g, w, |p, q| p * q));
                }
                if self.wants(*b) {
                    self.accumulate(grads, *b, zip_map(g, x, |p, q| p * q));
                }
            }
            Op::Div(a, b) => {
                let (x, w) = (self.value(*a), self.value(*b));
                if self.wants(*a) {
                    self.accumulate(grads, *a, zip_map(g, w, |p, q| p / q));
                }
                if self.wants(*b) {
                    let ratio = zip_map(x, w, |p, q| p / (q * q));
                    self.accumulate(grads, *b, zip_map(g, &ratio, |p, q| -p * q));
                }
            }
            Op::AddRow(m, row) => {
                self.accumulate(grads, *m, g.clone());
                if self.wants(*row) {
                    let (r, c) = g.dims2()?;
                    let mut sums = vec![0.0; c];
                    for i in 0..r {
                        for (s, v) in sums.iter_mut().zip(g.row(i)) {
                            *s += v;
                        }
                    }
                    self.accumulate(grads, *row, Tensor::matrix(1, c, sums)?);
                }
            }
            Op::MulCol(m, col) => {
                let (x, w) = (self.value(*m), self.value(*col));
                let (r, c) = x.dims2()?;
                if self.wants(*m) {
                    let mut dm = g.data().to_vec();
                    for i in 0..r {
                        let s = w.data()[i];
                        dm[i * c..(i + 1) * c].iter_mut().for_each(|v| *v *= s);
                    }
                    self.accumulate(grads, *m, Tensor::matrix(r, c, dm)?);
                }
                if self.wants(*col) {
                    let dw = (0..r)
                        .map(|i| g.row(i).iter().zip(x.row(i)).map(|(p, q)| p * q).sum())
                        .collect();
                    self.accumulate(grads, *col, Tensor::column(dw));
                }
            }
            Op::Scale(a, s) => self.accumulate(grads, *a, g.map(|v| v * s)),
            Op::Relu(a) => {
                let x = self.value(*a);
                let d = zip_map(g, x, |p, q| if q > 0.0 { p } else { 0.0 });
                self.accumulate(grads, *a, d);
            }
            Op::Exp(a) => self.accumulate(grads, *a, zip_map(g, y, |p, q| p * q)),
            Op::Sigmoid(a) => {
                self.accumulate(grads, *a, zip_map(g, y, |p, q| p * q * (1.0 - q)))
            }
            Op::Clamp(a, lo, hi) => {
                let x = self.value(*a);
                let d = zip_map(g, x, |p, q| if q >= *lo && q <= *hi { p } else { 0.0 });
                self.accumulate(grads, *a, d);
            }
            Op::Dot(a, b) => {
                let s = g.item();
                let (x, w) = (self.value(*a), self.value(*b));
                if self.wants(*a) {
                    self.accumulate(grads, *a, w.map(|v| v * s));
                }
                if self.wants(*b) {
                    self.accumulate(grads, *b, x.map(|v| v * s));
                }
            }
            Op::RowDot(a, b) => {
                let (x, w) = (self.value(*a), self.value(*b));
                let (r, c) = x.dims2()?;
                let scaled = |t: &Tensor| {
                    let mut d = t.data().to_vec();
                    for i in 0..r {
                        let s = g.data()[i];
                        d[i * c..(i + 1) * c].iter_mut().for_each(|v| *v *= s);
                    }
                    Tensor::matrix(r, c, d)
                };
                if self.wants(*a) {
                    self.accumulate(grads, *a, scaled(w)?);
                }
                if self.wants(*b) {
                    self.accumulate(grads, *b, scaled(x)?);
                }
            }
            Op::Sum(a) => {
                let shape = self.value(*a).shape().to_vec();
                self.accumulate(grads, *a, Tensor::filled(&shape, g.item()));
            }
            Op::SoftmaxRows(a) => {
                let (r, c) = y.dims2()?;
                let mut d = vec![0.0; r * c];
                for i in 0..r {
                    let (yr, gr) = (y.row(i), g.row(i));
                    let inner: f64 = yr.iter().zip(gr).map(|(p, q)| p * q).sum();
                    for j in 0..c {
                        d[i * c + j] = yr[j] * (gr[j] - inner);
                    }
                }
                self.accumulate(grads, *a, Tensor::matrix(r, c, d)?);
            }
            Op::Column(a, j) => {
                let (r, c) = self.value(*a).dims2()?;
                let mut d = vec![0.0; r * c];
                for i in 0..r {
                    d[i * c + j] = g.data()[i];
                }
                self.accumulate(grads, *a, Tensor::matrix(r, c, d)?);
            }
            Op::ConcatCols(parts) => {
                let (r, total) = g.dims2()?;
                let mut offset = 0;
                for &p in parts {
                    let (_, c) = self.value(p).dims2()?;
                    if self.wants(p) {
                        let mut d = Vec::with_capacity(r * c);
                        for i in 0..r {
                            d.extend_from_slice(&g.data()[i * total + offset..i * total + offset + c]);
                        }
                        self.accumulate(grads, p, Tensor::matrix(r, c, d)?);
                    }
                    offset += c;
                }
            }
            Op::GatherRows(a, index) => {
                let rows = self.value(*a).shape()[0];
                self.accumulate(grads, *a, scatter_add_rows(g, index, rows));
            }
            Op::ScatterAddRows(a, index) => {
                self.accumulate(grads, *a, gather_rows(g, index));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_forward_and_backward() {
        let mut tape = Tape::new();
        let x = tape.param(Tensor::column(vec![-1.0, 2.0]));
        let y = tape.relu(x);
        assert_eq!(tape.value(y).data(), &[0.0, 2.0]);
        let loss = tape.sum(y);
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.get(x).unwrap().data(), &[0.0, 1.0]);
    }

    #[test]
    fn sigmoid_at_zero() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::scalar(0.0));
        let y = tape.sigmoid(x);
        assert_eq!(tape.value(y).item(), 0.5);
    }

    #[test]
    fn matmul_shapes_and_gradient_shapes() {
        let mut tape = Tape::new();
        let a = tape.param(Tensor::matrix(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap());
        let b = tape.param(Tensor::column(vec![1.0, 0.0, -1.0]));
        let c = tape.matmul(a, b).unwrap();
        assert_eq!(tape.value(c).shape(), &[2, 1]);
        let loss = tape.sum(c);
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.get(a).unwrap().shape(), &[2, 3]);
        assert_eq!(grads.get(b).unwrap().shape(), &[3, 1]);
        assert_eq!(grads.get(b).unwrap().data(), &[5.0, 7.0, 9.0]);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::zeros(&[2, 2]));
        let b = tape.constant(Tensor::zeros(&[3, 1]));
        assert!(matches!(
            tape.add(a, b),
            Err(AutodiffError::ShapeMismatch { op: "add", .. })
        ));
        assert!(tape.matmul(a, b).is_err());
        assert!(tape.row_dot(a, b).is_err());
    }

    #[test]
    fn unused_param_gets_zero_gradient() {
        let mut tape = Tape::new();
        let used = tape.param(Tensor::scalar(3.0));
        let unused = tape.param(Tensor::zeros(&[2, 2]));
        let sq = tape.mul(used, used).unwrap();
        let grads = tape.backward(sq).unwrap();
        assert_eq!(grads.get(used).unwrap().item(), 6.0);
        assert_eq!(grads.get(unused).unwrap(), &Tensor::zeros(&[2, 2]));
    }

    #[test]
    fn constants_are_not_differentiated() {
        let mut tape = Tape::new();
        let c = tape.constant(Tensor::scalar(2.0));
        let p = tape.param(Tensor::scalar(5.0));
        let prod = tape.mul(c, p).unwrap();
        assert!(!tape.requires_grad(c));
        let grads = tape.backward(prod).unwrap();
        assert!(grads.get(c).is_none());
        assert_eq!(grads.get(p).unwrap().item(), 2.0);
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let mut tape = Tape::new();
        let p = tape.param(Tensor::zeros(&[2, 1]));
        assert!(matches!(
            tape.backward(p),
            Err(AutodiffError::NonScalarLoss(_))
        ));
    }

    #[test]
    fn scatter_then_gather_round_trip_values() {
        let mut tape = Tape::new();
        let m = tape.param(Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap());
        let idx: Arc<[usize]> = vec![1, 1, 0].into();
        let g = tape.gather_rows(m, idx.clone()).unwrap();
        assert_eq!(tape.value(g).data(), &[3.0, 4.0, 3.0, 4.0, 1.0, 2.0]);
        let s = tape.scatter_add_rows(g, idx, 2).unwrap();
        assert_eq!(tape.value(s).data(), &[1.0, 2.0, 6.0, 8.0]);
        assert!(tape.gather_rows(m, vec![2].into()).is_err());
    }
}
