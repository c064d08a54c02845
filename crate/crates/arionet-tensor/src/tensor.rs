//! Tensor values, forward ops, and the reverse-mode backward pass.

use crate::TensorError;
use std::cell::{Ref, RefCell};
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::atomic::{AtomicUsize, Ordering};

static NEXT_ID: AtomicUsize = AtomicUsize::new(0);

/// Four-lane dot product; the independent accumulators let the
/// optimizer vectorize without changing results across runs.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for i in 0..chunks {
        let j = 4 * i;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for j in chunks * 4..n {
        total += a[j] * b[j];
    }
    total
}

/// Backward rule recorded by each op. Saved values are whatever the
/// rule needs beyond its parents' data.
#[derive(Debug)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
    AddRow,
    MulScalar(f64),
    Matmul,
    Transpose,
    Relu,
    Exp,
    Log,
    Softmax,
    LayerNorm(f64),
    L2Normalize,
    SumAxis(usize),
    SumAll,
    Concat { axis: usize },
    Slice { axis: usize, start: usize },
    Dropout { mask: Vec<f64> },
}

#[derive(Debug)]
struct Inner {
    id: usize,
    shape: Vec<usize>,
    data: RefCell<Vec<f64>>,
    grad: RefCell<Option<Vec<f64>>>,
    parents: Vec<Tensor>,
    op: Option<Op>,
    requires_grad: bool,
}

/// Dense tensor participating in a reverse-mode differentiation graph.
///
/// Cloning is cheap (shared node). Rank 1 and rank 2 shapes are used
/// throughout; matrices are row-major.
#[derive(Debug, Clone)]
pub struct Tensor(Rc<Inner>);

fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl Tensor {
    fn make(
        shape: Vec<usize>,
        data: Vec<f64>,
        parents: Vec<Tensor>,
        op: Option<Op>,
        requires_grad: bool,
    ) -> Tensor {
        debug_assert_eq!(numel(&shape), data.len());
        Tensor(Rc::new(Inner {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            shape,
            data: RefCell::new(data),
            grad: RefCell::new(None),
            parents,
            op,
            requires_grad,
        }))
    }

    /// Constant tensor (not tracked by the graph).
    pub fn constant(shape: &[usize], data: Vec<f64>) -> Tensor {
        assert_eq!(numel(shape), data.len(), "data length vs shape");
        Tensor::make(shape.to_vec(), data, Vec::new(), None, false)
    }

    /// Learnable parameter: a graph leaf that accumulates gradients.
    pub fn param(shape: &[usize], data: Vec<f64>) -> Tensor {
        assert_eq!(numel(shape), data.len(), "data length vs shape");
        Tensor::make(shape.to_vec(), data, Vec::new(), None, true)
    }

    pub fn zeros(shape: &[usize]) -> Tensor {
        Tensor::constant(shape, vec![0.0; numel(shape)])
    }

    pub fn scalar(v: f64) -> Tensor {
        Tensor::constant(&[1, 1], vec![v])
    }

    fn child(&self, shape: Vec<usize>, data: Vec<f64>, parents: Vec<Tensor>, op: Op) -> Tensor {
        let requires_grad = parents.iter().any(|p| p.0.requires_grad);
        let op = requires_grad.then_some(op);
        let parents = if op.is_some() { parents } else { Vec::new() };
        Tensor::make(shape, data, parents, op, requires_grad)
    }

    pub fn id(&self) -> usize {
        self.0.id
    }

    pub fn shape(&self) -> &[usize] {
        &self.0.shape
    }

    pub fn numel(&self) -> usize {
        numel(&self.0.shape)
    }

    pub fn requires_grad(&self) -> bool {
        self.0.requires_grad
    }

    /// Rows/cols of a rank-2 tensor; rank-1 is treated as a single row.
    pub fn rows(&self) -> usize {
        match self.0.shape.len() {
            2 => self.0.shape[0],
            _ => 1,
        }
    }

    pub fn cols(&self) -> usize {
        match self.0.shape.len() {
            2 => self.0.shape[1],
            1 => self.0.shape[0],
            _ => 1,
        }
    }

    pub fn data(&self) -> Ref<'_, Vec<f64>> {
        self.0.data.borrow()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.data.borrow().clone()
    }

    /// Scalar value of a one-element tensor.
    pub fn item(&self) -> f64 {
        assert_eq!(self.numel(), 1, "item() on shape {:?}", self.0.shape);
        self.0.data.borrow()[0]
    }

    /// Overwrite the raw values (used by the optimizer and checkpoint load).
    pub fn set_data(&self, values: &[f64]) {
        let mut d = self.0.data.borrow_mut();
        assert_eq!(d.len(), values.len());
        d.copy_from_slice(values);
    }

    /// Accumulated gradient for a parameter, zeros if backward never ran.
    pub fn grad_vec(&self) -> Vec<f64> {
        self.0
            .grad
            .borrow()
            .clone()
            .unwrap_or_else(|| vec![0.0; self.numel()])
    }

    pub fn zero_grad(&self) {
        *self.0.grad.borrow_mut() = None;
    }

    fn accumulate_grad(&self, delta: &[f64]) {
        let mut slot = self.0.grad.borrow_mut();
        match slot.as_mut() {
            Some(g) => {
                for (gi, di) in g.iter_mut().zip(delta) {
                    *gi += di;
                }
            }
            None => *slot = Some(delta.to_vec()),
        }
    }

    // ------------------------------------------------------------------
    // Elementwise and scalar ops
    // ------------------------------------------------------------------

    fn check_same_shape(&self, other: &Tensor, op: &'static str) -> Result<(), TensorError> {
        if self.0.shape != other.0.shape {
            return Err(TensorError::ShapeMismatch {
                op,
                lhs: self.0.shape.clone(),
                rhs: other.0.shape.clone(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        self.check_same_shape(other, "add")?;
        let data = {
            let a = self.data();
            let b = other.data();
            a.iter().zip(b.iter()).map(|(x, y)| x + y).collect()
        };
        Ok(self.child(
            self.0.shape.clone(),
            data,
            vec![self.clone(), other.clone()],
            Op::Add,
        ))
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        self.check_same_shape(other, "sub")?;
        let data = {
            let a = self.data();
            let b = other.data();
            a.iter().zip(b.iter()).map(|(x, y)| x - y).collect()
        };
        Ok(self.child(
            self.0.shape.clone(),
            data,
            vec![self.clone(), other.clone()],
            Op::Sub,
        ))
    }

    pub fn mul(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        self.check_same_shape(other, "mul")?;
        let data = {
            let a = self.data();
            let b = other.data();
            a.iter().zip(b.iter()).map(|(x, y)| x * y).collect()
        };
        Ok(self.child(
            self.0.shape.clone(),
            data,
            vec![self.clone(), other.clone()],
            Op::Mul,
        ))
    }

    pub fn div(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        self.check_same_shape(other, "div")?;
        let data = {
            let a = self.data();
            let b = other.data();
            a.iter().zip(b.iter()).map(|(x, y)| x / y).collect()
        };
        Ok(self.child(
            self.0.shape.clone(),
            data,
            vec![self.clone(), other.clone()],
            Op::Div,
        ))
    }

    /// Broadcast-add a rank-1 row vector to every row of a matrix.
    pub fn add_row(&self, row: &Tensor) -> Result<Tensor, TensorError> {
        if row.0.shape.len() != 1 || row.0.shape[0] != self.cols() || self.0.shape.len() != 2 {
            return Err(TensorError::ShapeMismatch {
                op: "add_row",
                lhs: self.0.shape.clone(),
                rhs: row.0.shape.clone(),
            });
        }
        let n = self.cols();
        let data = {
            let a = self.data();
            let b = row.data();
            a.iter().enumerate().map(|(i, x)| x + b[i % n]).collect()
        };
        Ok(self.child(
            self.0.shape.clone(),
            data,
            vec![self.clone(), row.clone()],
            Op::AddRow,
        ))
    }

    pub fn mul_scalar(&self, c: f64) -> Tensor {
        let data = self.data().iter().map(|x| x * c).collect();
        self.child(
            self.0.shape.clone(),
            data,
            vec![self.clone()],
            Op::MulScalar(c),
        )
    }

    pub fn relu(&self) -> Tensor {
        let data = self.data().iter().map(|x| x.max(0.0)).collect();
        self.child(self.0.shape.clone(), data, vec![self.clone()], Op::Relu)
    }

    pub fn exp(&self) -> Tensor {
        let data = self.data().iter().map(|x| x.exp()).collect();
        self.child(self.0.shape.clone(), data, vec![self.clone()], Op::Exp)
    }

    pub fn log(&self) -> Tensor {
        let data = self.data().iter().map(|x| x.ln()).collect();
        self.child(self.0.shape.clone(), data, vec![self.clone()], Op::Log)
    }

    // ------------------------------------------------------------------
    // Matrix ops
    // ------------------------------------------------------------------

    fn as_matrix(&self, op: &'static str) -> Result<(usize, usize), TensorError> {
        match self.0.shape.len() {
            2 => Ok((self.0.shape[0], self.0.shape[1])),
            _ => Err(TensorError::NotAMatrix {
                op,
                shape: self.0.shape.clone(),
            }),
        }
    }

    pub fn matmul(&self, other: &Tensor) -> Result<Tensor, TensorError> {
        let (m, k) = self.as_matrix("matmul")?;
        let (k2, n) = other.as_matrix("matmul")?;
        if k != k2 {
            return Err(TensorError::ShapeMismatch {
                op: "matmul",
                lhs: self.0.shape.clone(),
                rhs: other.0.shape.clone(),
            });
        }
        let mut out = vec![0.0; m * n];
        {
            let a = self.data();
            let b = other.data();
            for i in 0..m {
                let a_row = &a[i * k..(i + 1) * k];
                let o_row = &mut out[i * n..(i + 1) * n];
                for (kk, &aik) in a_row.iter().enumerate() {
                    let b_row = &b[kk * n..(kk + 1) * n];
                    for (o, bv) in o_row.iter_mut().zip(b_row) {
                        *o += aik * bv;
                    }
                }
            }
        }
        Ok(self.child(
            vec![m, n],
            out,
            vec![self.clone(), other.clone()],
            Op::Matmul,
        ))
    }

    pub fn transpose(&self) -> Result<Tensor, TensorError> {
        let (m, n) = self.as_matrix("transpose")?;
        let a = self.data();
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = a[i * n + j];
            }
        }
        drop(a);
        Ok(self.child(vec![n, m], out, vec![self.clone()], Op::Transpose))
    }

    // ------------------------------------------------------------------
    // Row-wise (last axis) ops
    // ------------------------------------------------------------------

    /// Softmax over the last axis; every row sums to 1.
    pub fn softmax(&self) -> Tensor {
        let n = self.cols().max(1);
        let mut out = self.to_vec();
        for row in out.chunks_mut(n) {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                sum += *v;
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
        self.child(self.0.shape.clone(), out, vec![self.clone()], Op::Softmax)
    }

    /// Normalize each row to zero mean and unit variance (no affine).
    pub fn layer_norm(&self, eps: f64) -> Tensor {
        let n = self.cols().max(1);
        let mut out = self.to_vec();
        for row in out.chunks_mut(n) {
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let inv = 1.0 / (var + eps).sqrt();
            for v in row.iter_mut() {
                *v = (*v - mean) * inv;
            }
        }
        self.child(
            self.0.shape.clone(),
            out,
            vec![self.clone()],
            Op::LayerNorm(eps),
        )
    }

    /// Scale each row to unit Euclidean norm; zero rows stay zero.
    pub fn l2_normalize(&self) -> Tensor {
        let n = self.cols().max(1);
        let mut out = self.to_vec();
        for row in out.chunks_mut(n) {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for v in row.iter_mut() {
                    *v /= norm;
                }
            }
        }
        self.child(
            self.0.shape.clone(),
            out,
            vec![self.clone()],
            Op::L2Normalize,
        )
    }

    // ------------------------------------------------------------------
    // Reductions
    // ------------------------------------------------------------------

    /// Mean along `axis` of a matrix, keeping the reduced axis with size 1.
    pub fn mean_axis(&self, axis: usize) -> Result<Tensor, TensorError> {
        let scale = match axis {
            0 => self.rows(),
            1 => self.cols(),
            _ => 0,
        };
        let summed = self.sum_axis(axis)?;
        Ok(summed.mul_scalar(1.0 / scale as f64))
    }

    /// Sum along `axis` of a matrix, keeping the reduced axis with size 1.
    pub fn sum_axis(&self, axis: usize) -> Result<Tensor, TensorError> {
        let (m, n) = self.as_matrix("sum_axis")?;
        if axis > 1 {
            return Err(TensorError::BadAxis {
                op: "sum_axis",
                axis,
                shape: self.0.shape.clone(),
            });
        }
        let a = self.data();
        let (shape, out) = if axis == 0 {
            let mut out = vec![0.0; n];
            for i in 0..m {
                for j in 0..n {
                    out[j] += a[i * n + j];
                }
            }
            (vec![1, n], out)
        } else {
            let mut out = vec![0.0; m];
            for i in 0..m {
                out[i] = a[i * n..(i + 1) * n].iter().sum();
            }
            (vec![m, 1], out)
        };
        drop(a);
        Ok(self.child(shape, out, vec![self.clone()], Op::SumAxis(axis)))
    }

    /// Sum of all entries as a [1, 1] tensor.
    pub fn sum_all(&self) -> Tensor {
        let total = self.data().iter().sum();
        self.child(vec![1, 1], vec![total], vec![self.clone()], Op::SumAll)
    }

    // ------------------------------------------------------------------
    // Structural ops
    // ------------------------------------------------------------------

    /// Concatenate matrices along `axis` (0 = stack rows, 1 = stack cols).
    pub fn concat(parts: &[Tensor], axis: usize) -> Result<Tensor, TensorError> {
        if parts.is_empty() {
            return Err(TensorError::EmptyConcat);
        }
        let (m0, n0) = parts[0].as_matrix("concat")?;
        let mut rows = m0;
        let mut cols = n0;
        for p in &parts[1..] {
            let (m, n) = p.as_matrix("concat")?;
            match axis {
                0 if n == n0 => rows += m,
                1 if m == m0 => cols += n,
                _ => {
                    return Err(TensorError::ShapeMismatch {
                        op: "concat",
                        lhs: parts[0].0.shape.clone(),
                        rhs: p.0.shape.clone(),
                    })
                }
            }
        }
        if axis > 1 {
            return Err(TensorError::BadAxis {
                op: "concat",
                axis,
                shape: parts[0].0.shape.clone(),
            });
        }

        let mut out = vec![0.0; rows * cols];
        if axis == 0 {
            let mut offset = 0;
            for p in parts {
                let d = p.data();
                out[offset..offset + d.len()].copy_from_slice(&d);
                offset += d.len();
            }
        } else {
            let mut col_offset = 0;
            for p in parts {
                let (m, n) = (p.rows(), p.cols());
                let d = p.data();
                for i in 0..m {
                    out[i * cols + col_offset..i * cols + col_offset + n]
                        .copy_from_slice(&d[i * n..(i + 1) * n]);
                }
                col_offset += n;
            }
        }

        let requires_grad = parts.iter().any(|p| p.0.requires_grad);
        let op = requires_grad.then_some(Op::Concat { axis });
        let parents = if op.is_some() { parts.to_vec() } else { Vec::new() };
        Ok(Tensor::make(
            vec![rows, cols],
            out,
            parents,
            op,
            requires_grad,
        ))
    }

    /// Contiguous slice along `axis` of a matrix.
    pub fn slice(&self, axis: usize, start: usize, len: usize) -> Result<Tensor, TensorError> {
        let (m, n) = self.as_matrix("slice")?;
        let bound = if axis == 0 { m } else { n };
        if axis > 1 || start + len > bound || len == 0 {
            return Err(TensorError::BadSlice {
                axis,
                start,
                len,
                shape: self.0.shape.clone(),
            });
        }
        let a = self.data();
        let (shape, out) = if axis == 0 {
            (vec![len, n], a[start * n..(start + len) * n].to_vec())
        } else {
            let mut out = Vec::with_capacity(m * len);
            for i in 0..m {
                out.extend_from_slice(&a[i * n + start..i * n + start + len]);
            }
            (vec![m, len], out)
        };
        drop(a);
        Ok(self.child(shape, out, vec![self.clone()], Op::Slice { axis, start }))
    }

    /// Inverted dropout with a fixed seed; rate 0 is the identity.
    pub fn dropout(&self, rate: f64, seed: u64) -> Result<Tensor, TensorError> {
        if !(0.0..1.0).contains(&rate) {
            return Err(TensorError::BadDropoutRate(rate));
        }
        if rate == 0.0 {
            return Ok(self.clone());
        }
        let mut rng = arionet_rng::Rng::seed_from_u64(seed);
        let keep_scale = 1.0 / (1.0 - rate);
        let mask: Vec<f64> = (0..self.numel())
            .map(|_| if rng.next_f64() < rate { 0.0 } else { keep_scale })
            .collect();
        let data = self.data().iter().zip(&mask).map(|(x, m)| x * m).collect();
        Ok(self.child(
            self.0.shape.clone(),
            data,
            vec![self.clone()],
            Op::Dropout { mask },
        ))
    }
}

// ----------------------------------------------------------------------
// Backward pass
// ----------------------------------------------------------------------

/// Run reverse-mode differentiation from a scalar loss, accumulating
/// dLoss/dParam into every reachable parameter's grad buffer. Calling
/// this twice without zeroing doubles the parameter gradients.
pub fn backward(loss: &Tensor) -> Result<(), TensorError> {
    if loss.numel() != 1 {
        return Err(TensorError::NonScalarLoss(loss.shape().to_vec()));
    }

    // Topological order over the reachable subgraph (iterative DFS).
    let mut order: Vec<Tensor> = Vec::new();
    let mut seen: HashMap<usize, ()> = HashMap::new();
    let mut stack: Vec<(Tensor, usize)> = vec![(loss.clone(), 0)];
    seen.insert(loss.id(), ());
    while let Some((node, child_idx)) = stack.pop() {
        if child_idx < node.0.parents.len() {
            let parent = node.0.parents[child_idx].clone();
            stack.push((node, child_idx + 1));
            if (parent.0.op.is_some() || parent.0.requires_grad)
                && seen.insert(parent.id(), ()).is_none() {
                    stack.push((parent, 0));
                }
        } else {
            order.push(node);
        }
    }

    // Flowing gradients live in a scratch map; only parameters keep them.
    let mut flow: HashMap<usize, Vec<f64>> = HashMap::new();
    flow.insert(loss.id(), vec![1.0]);

    for node in order.iter().rev() {
        let Some(dout) = flow.remove(&node.id()) else {
            continue;
        };
        if node.0.requires_grad && node.0.op.is_none() {
            node.accumulate_grad(&dout);
        }
        let Some(op) = &node.0.op else { continue };
        propagate(node, op, &dout, &mut flow);
    }
    Ok(())
}

fn add_into(flow: &mut HashMap<usize, Vec<f64>>, target: &Tensor, delta: Vec<f64>) {
    if !(target.0.requires_grad || target.0.op.is_some()) {
        return;
    }
    match flow.entry(target.id()) {
        std::collections::hash_map::Entry::Occupied(mut e) => {
            for (g, d) in e.get_mut().iter_mut().zip(&delta) {
                *g += d;
            }
        }
        std::collections::hash_map::Entry::Vacant(e) => {
            e.insert(delta);
        }
    }
}

fn propagate(node: &Tensor, op: &Op, dout: &[f64], flow: &mut HashMap<usize, Vec<f64>>) {
    let parents = &node.0.parents;
    match op {
        Op::Add => {
            add_into(flow, &parents[0], dout.to_vec());
            add_into(flow, &parents[1], dout.to_vec());
        }
        Op::Sub => {
            add_into(flow, &parents[0], dout.to_vec());
            add_into(flow, &parents[1], dout.iter().map(|d| -d).collect());
        }
        Op::Mul => {
            let a = parents[0].data();
            let b = parents[1].data();
            add_into(
                flow,
                &parents[0],
                dout.iter().zip(b.iter()).map(|(d, y)| d * y).collect(),
            );
            add_into(
                flow,
                &parents[1],
                dout.iter().zip(a.iter()).map(|(d, x)| d * x).collect(),
            );
        }
        Op::Div => {
            let b = parents[1].data();
            let z = node.data();
            add_into(
                flow,
                &parents[0],
                dout.iter().zip(b.iter()).map(|(d, y)| d / y).collect(),
            );
            add_into(
                flow,
                &parents[1],
                dout.iter()
                    .zip(z.iter())
                    .zip(b.iter())
                    .map(|((d, zz), y)| -d * zz / y)
                    .collect(),
            );
        }
        Op::AddRow => {
            let n = parents[0].cols();
            add_into(flow, &parents[0], dout.to_vec());
            let mut db = vec![0.0; n];
            for (i, d) in dout.iter().enumerate() {
                db[i % n] += d;
            }
            add_into(flow, &parents[1], db);
        }
        Op::MulScalar(c) => {
            add_into(flow, &parents[0], dout.iter().map(|d| d * c).collect());
        }
        Op::Matmul => {
            let (m, k) = (parents[0].rows(), parents[0].cols());
            let n = parents[1].cols();
            let a = parents[0].data();
            let b = parents[1].data();
            // dA = dout @ B^T
            let mut da = vec![0.0; m * k];
            for i in 0..m {
                let d_row = &dout[i * n..(i + 1) * n];
                let da_row = &mut da[i * k..(i + 1) * k];
                for (kk, slot) in da_row.iter_mut().enumerate() {
                    *slot = dot(d_row, &b[kk * n..(kk + 1) * n]);
                }
            }
            // dB = A^T @ dout
            let mut db = vec![0.0; k * n];
            for i in 0..m {
                let a_row = &a[i * k..(i + 1) * k];
                let d_row = &dout[i * n..(i + 1) * n];
                for (kk, &aik) in a_row.iter().enumerate() {
                    if aik != 0.0 {
                        let db_row = &mut db[kk * n..(kk + 1) * n];
                        for (slot, d) in db_row.iter_mut().zip(d_row) {
                            *slot += aik * d;
                        }
                    }
                }
            }
            drop(a);
            drop(b);
            add_into(flow, &parents[0], da);
            add_into(flow, &parents[1], db);
        }
        Op::Transpose => {
            let (m, n) = (node.rows(), node.cols());
            let mut dp = vec![0.0; m * n];
            for i in 0..m {
                for j in 0..n {
                    dp[j * m + i] = dout[i * n + j];
                }
            }
            add_into(flow, &parents[0], dp);
        }
        Op::Relu => {
            let x = parents[0].data();
            add_into(
                flow,
                &parents[0],
                dout.iter()
                    .zip(x.iter())
                    .map(|(d, v)| if *v > 0.0 { *d } else { 0.0 })
                    .collect(),
            );
        }
        Op::Exp => {
            let z = node.data();
            add_into(
                flow,
                &parents[0],
                dout.iter().zip(z.iter()).map(|(d, zz)| d * zz).collect(),
            );
        }
        Op::Log => {
            let x = parents[0].data();
            add_into(
                flow,
                &parents[0],
                dout.iter().zip(x.iter()).map(|(d, v)| d / v).collect(),
            );
        }
        Op::Softmax => {
            let n = node.cols().max(1);
            let z = node.data();
            let mut dx = vec![0.0; dout.len()];
            for r in 0..dout.len() / n {
                let zr = &z[r * n..(r + 1) * n];
                let dr = &dout[r * n..(r + 1) * n];
                let dot: f64 = zr.iter().zip(dr).map(|(zz, d)| zz * d).sum();
                for j in 0..n {
                    dx[r * n + j] = zr[j] * (dr[j] - dot);
                }
            }
            add_into(flow, &parents[0], dx);
        }
        Op::LayerNorm(eps) => {
            let n = node.cols().max(1);
            let x = parents[0].data();
            let mut dx = vec![0.0; dout.len()];
            for r in 0..dout.len() / n {
                let xr = &x[r * n..(r + 1) * n];
                let dr = &dout[r * n..(r + 1) * n];
                let mean = xr.iter().sum::<f64>() / n as f64;
                let var = xr.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                let inv = 1.0 / (var + eps).sqrt();
                let xhat: Vec<f64> = xr.iter().map(|v| (v - mean) * inv).collect();
                let mean_d = dr.iter().sum::<f64>() / n as f64;
                let mean_dxhat = dr.iter().zip(&xhat).map(|(d, h)| d * h).sum::<f64>() / n as f64;
                for j in 0..n {
                    dx[r * n + j] = inv * (dr[j] - mean_d - xhat[j] * mean_dxhat);
                }
            }
            add_into(flow, &parents[0], dx);
        }
        Op::L2Normalize => {
            let n = node.cols().max(1);
            let x = parents[0].data();
            let z = node.data();
            let mut dx = vec![0.0; dout.len()];
            for r in 0..dout.len() / n {
                let xr = &x[r * n..(r + 1) * n];
                let zr = &z[r * n..(r + 1) * n];
                let dr = &dout[r * n..(r + 1) * n];
                let norm = xr.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    continue;
                }
                let dot: f64 = zr.iter().zip(dr).map(|(zz, d)| zz * d).sum();
                for j in 0..n {
                    dx[r * n + j] = (dr[j] - zr[j] * dot) / norm;
                }
            }
            add_into(flow, &parents[0], dx);
        }
        Op::SumAxis(axis) => {
            let (m, n) = (parents[0].rows(), parents[0].cols());
            let mut dp = vec![0.0; m * n];
            if *axis == 0 {
                for i in 0..m {
                    dp[i * n..(i + 1) * n].copy_from_slice(dout);
                }
            } else {
                for i in 0..m {
                    for j in 0..n {
                        dp[i * n + j] = dout[i];
                    }
                }
            }
            add_into(flow, &parents[0], dp);
        }
        Op::SumAll => {
            add_into(flow, &parents[0], vec![dout[0]; parents[0].numel()]);
        }
        Op::Concat { axis } => {
            let cols = node.cols();
            if *axis == 0 {
                let mut offset = 0;
                for p in parents {
                    let len = p.numel();
                    add_into(flow, p, dout[offset..offset + len].to_vec());
                    offset += len;
                }
            } else {
                let rows = node.rows();
                let mut col_offset = 0;
                for p in parents {
                    let n = p.cols();
                    let mut dp = vec![0.0; rows * n];
                    for i in 0..rows {
                        dp[i * n..(i + 1) * n].copy_from_slice(
                            &dout[i * cols + col_offset..i * cols + col_offset + n],
                        );
                    }
                    add_into(flow, p, dp);
                    col_offset += n;
                }
            }
        }
        Op::Slice { axis, start } => {
            let (pm, pn) = (parents[0].rows(), parents[0].cols());
            let mut dp = vec![0.0; pm * pn];
            if *axis == 0 {
                let n = node.cols();
                dp[start * n..start * n + dout.len()].copy_from_slice(dout);
            } else {
                let len = node.cols();
                for i in 0..node.rows() {
                    dp[i * pn + start..i * pn + start + len]
                        .copy_from_slice(&dout[i * len..(i + 1) * len]);
                }
            }
            add_into(flow, &parents[0], dp);
        }
        Op::Dropout { mask } => {
            add_into(
                flow,
                &parents[0],
                dout.iter().zip(mask).map(|(d, m)| d * m).collect(),
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_of_zeros_is_uniform() {
        let x = Tensor::constant(&[1, 3], vec![0.0; 3]);
        let y = x.softmax();
        for v in y.to_vec() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let x = Tensor::constant(&[2, 4], vec![0.3, -2.0, 5.0, 1.0, 0.0, 0.1, -0.1, 9.0]);
        let y = x.softmax();
        let d = y.to_vec();
        for r in 0..2 {
            let sum: f64 = d[r * 4..(r + 1) * 4].iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(d[r * 4..(r + 1) * 4].iter().all(|&v| v > 0.0 && v < 1.0));
        }
    }

    #[test]
    fn layer_norm_of_constant_row_is_zero() {
        let x = Tensor::constant(&[1, 5], vec![3.3; 5]);
        let y = x.layer_norm(1e-5);
        assert!(y.to_vec().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn layer_norm_standardizes_rows() {
        let x = Tensor::constant(&[1, 4], vec![1.0, 2.0, 3.0, 10.0]);
        let y = x.layer_norm(1e-5).to_vec();
        let mean: f64 = y.iter().sum::<f64>() / 4.0;
        let var: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-10);
        // eps shrinks the output variance by eps / (var + eps); rows with
        // real spread stay within 1e-6 of unit variance.
        assert!((var - 1.0).abs() < 1e-6, "variance {var}");
    }

    #[test]
    fn matmul_identity() {
        let eye = Tensor::constant(&[3, 3], vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let x = Tensor::constant(&[3, 2], (0..6).map(|v| v as f64).collect());
        let y = eye.matmul(&x).unwrap();
        assert_eq!(y.to_vec(), x.to_vec());
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = Tensor::zeros(&[2, 3]);
        let b = Tensor::zeros(&[2, 3]);
        let err = a.matmul(&b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[2, 3]"), "{msg}");
    }

    #[test]
    fn backward_of_sum_gives_ones() {
        let w = Tensor::param(&[2, 3], vec![0.5; 6]);
        let loss = w.sum_all();
        backward(&loss).unwrap();
        assert_eq!(w.grad_vec(), vec![1.0; 6]);
    }

    #[test]
    fn backward_of_half_norm_gives_w() {
        let w = Tensor::param(&[1, 4], vec![1.0, -2.0, 3.0, 0.5]);
        let loss = w.mul(&w).unwrap().sum_all().mul_scalar(0.5);
        backward(&loss).unwrap();
        let g = w.grad_vec();
        for (gi, wi) in g.iter().zip(w.to_vec()) {
            assert!((gi - wi).abs() < 1e-12);
        }
    }

    #[test]
    fn backward_accumulates_across_calls() {
        let w = Tensor::param(&[1, 2], vec![1.0, 2.0]);
        let loss = w.sum_all();
        backward(&loss).unwrap();
        backward(&loss).unwrap();
        assert_eq!(w.grad_vec(), vec![2.0, 2.0]);
        w.zero_grad();
        assert_eq!(w.grad_vec(), vec![0.0, 0.0]);
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let w = Tensor::param(&[1, 2], vec![1.0, 2.0]);
        let y = w.mul_scalar(2.0);
        assert!(matches!(
            backward(&y),
            Err(TensorError::NonScalarLoss(_))
        ));
    }

    #[test]
    fn dropout_rate_zero_is_identity() {
        let x = Tensor::constant(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]);
        let y = x.dropout(0.0, 7).unwrap();
        assert_eq!(x.id(), y.id());
    }

    #[test]
    fn dropout_is_deterministic_for_fixed_seed() {
        let x = Tensor::constant(&[1, 64], vec![1.0; 64]);
        let a = x.dropout(0.5, 99).unwrap().to_vec();
        let b = x.dropout(0.5, 99).unwrap().to_vec();
        assert_eq!(a, b);
        assert!(a.contains(&0.0));
        assert!(a.contains(&2.0));
    }

    #[test]
    fn slice_and_concat_round_trip() {
        let x = Tensor::constant(&[2, 4], (0..8).map(|v| v as f64).collect());
        let left = x.slice(1, 0, 2).unwrap();
        let right = x.slice(1, 2, 2).unwrap();
        let back = Tensor::concat(&[left, right], 1).unwrap();
        assert_eq!(back.to_vec(), x.to_vec());
        let top = x.slice(0, 0, 1).unwrap();
        let bottom = x.slice(0, 1, 1).unwrap();
        let back = Tensor::concat(&[top, bottom], 0).unwrap();
        assert_eq!(back.to_vec(), x.to_vec());
    }

    #[test]
    fn l2_normalize_unit_norm_or_zero() {
        let x = Tensor::constant(&[2, 3], vec![3.0, 4.0, 0.0, 0.0, 0.0, 0.0]);
        let y = x.l2_normalize().to_vec();
        let norm0 = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
        assert!((norm0 - 1.0).abs() < 1e-12);
        assert_eq!(&y[3..], &[0.0, 0.0, 0.0]);
    }
}
