//! Reverse-mode differentiation over [`Matrix`] values.
//!
//! A [`Tape`] records every operation in execution order. `backward` walks
//! that record in reverse, propagating gradients from a 1×1 loss node.
//! Gradients of leaves accumulate across `backward` calls until
//! [`Tape::zero_grad`]; gradients of interior nodes are transient.

use std::sync::Arc;

use rayon::prelude::*;

use super::matrix::gemm;
use super::{CsrMatrix, Matrix};
use crate::error::{Error, Result};

/// Elements per parallel task in the N×N elementwise loops.
const PAR_CHUNK: usize = 1 << 15;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Which columns of each row a masked reduction visits.
#[derive(Clone, Debug)]
pub enum RowMask {
    All,
    /// Every column except `j == i`.
    OffDiagonal,
    /// Only `j == i`.
    Diagonal,
    /// Explicit sorted column lists, one per row.
    Pattern(Arc<Vec<Vec<usize>>>),
}

impl RowMask {
    fn for_each(&self, i: usize, cols: usize, mut f: impl FnMut(usize)) {
        match self {
            RowMask::All => (0..cols).for_each(f),
            RowMask::OffDiagonal => (0..cols).filter(|&j| j != i).for_each(f),
            RowMask::Diagonal => f(i),
            RowMask::Pattern(p) => p[i].iter().for_each(|&j| f(j)),
        }
    }

    fn check(&self, rows: usize, cols: usize, op: &'static str) -> Result<()> {
        match self {
            RowMask::Diagonal if rows > cols => Err(Error::dim(op, "diagonal mask on wide matrix")),
            RowMask::Pattern(p) if p.len() != rows || p.iter().flatten().any(|&j| j >= cols) => {
                Err(Error::dim(op, "mask pattern does not fit matrix"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(usize, usize),
    /// `a · bᵀ`
    MatMulNt(usize, usize),
    Transpose(usize),
    SparseMatMul(Arc<CsrMatrix>, usize),
    AddBias(usize, usize),
    Add(usize, usize),
    Sub(usize, usize),
    Div(usize, usize),
    Scale(usize, f64),
    AddConst(usize),
    Relu(usize),
    Exp(usize),
    Log(usize),
    ConcatCols(usize, usize),
    RowL2Normalize(usize, f64),
    /// `exp(a · bᵀ · scale)`
    ExpSimilarity(usize, usize, f64),
    MaskedRowSum(usize, RowMask),
    /// Output row `i` sums column `i` of the input over rows `mask(i)`.
    MaskedColSum(usize, RowMask),
    Sum(usize),
    Mean(usize),
    /// Mean negative log-softmax over `(row, class)` targets.
    SoftmaxCrossEntropy(usize, Arc<Vec<(usize, usize)>>),
}

#[derive(Debug)]
struct Node {
    value: Matrix,
    grad: Option<Matrix>,
    requires_grad: bool,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn same_shape(op: &'static str, a: &Matrix, b: &Matrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::dim(
            op,
            format!("{:?} vs {:?}", a.shape(), b.shape()),
        ));
    }
    Ok(())
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix, op: Op, inputs: &[usize]) -> Var {
        let requires_grad = inputs.iter().any(|&i| self.nodes[i].requires_grad);
        self.nodes.push(Node {
            value,
            grad: None,
            requires_grad,
            op,
        });
        Var(self.nodes.len() - 1)
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Matrix) -> Var {
        self.nodes.push(Node {
            value,
            grad: None,
            requires_grad: true,
            op: Op::Leaf,
        });
        Var(self.nodes.len() - 1)
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.nodes.push(Node {
            value,
            grad: None,
            requires_grad: false,
            op: Op::Leaf,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Accumulated gradient of a leaf, if any backward pass reached it.
    pub fn grad(&self, v: Var) -> Option<&Matrix> {
        self.nodes[v.0].grad.as_ref()
    }

    pub fn zero_grad(&mut self) {
        for n in &mut self.nodes {
            n.grad = None;
        }
    }

    fn val(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.val(a).matmul(self.val(b))?;
        Ok(self.push(out, Op::MatMul(a.0, b.0), &[a.0, b.0]))
    }

    /// `a · bᵀ`.
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.val(a), self.val(b));
        if av.cols() != bv.cols() {
            return Err(Error::dim(
                "matmul_nt",
                format!("{:?} x {:?}ᵀ", av.shape(), bv.shape()),
            ));
        }
        let mut out = Matrix::zeros(av.rows(), bv.rows());
        gemm(1.0, av, false, bv, true, 0.0, &mut out);
        Ok(self.push(out, Op::MatMulNt(a.0, b.0), &[a.0, b.0]))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let out = self.val(a).transpose();
        self.push(out, Op::Transpose(a.0), &[a.0])
    }

    /// Constant sparse matrix times a dense variable.
    pub fn sparse_matmul(&mut self, sp: Arc<CsrMatrix>, b: Var) -> Result<Var> {
        let out = sp.mul_dense(self.val(b))?;
        Ok(self.push(out, Op::SparseMatMul(sp, b.0), &[b.0]))
    }

    /// Adds a 1×C bias to every row of an R×C matrix.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (av, bv) = (self.val(a), self.val(bias));
        if bv.rows() != 1 || bv.cols() != av.cols() {
            return Err(Error::dim(
                "add_bias",
                format!("bias {:?} for input {:?}", bv.shape(), av.shape()),
            ));
        }
        let mut out = av.clone();
        for r in 0..out.rows() {
            for (o, b) in out.row_mut(r).iter_mut().zip(bv.data()) {
                *o += b;
            }
        }
        Ok(self.push(out, Op::AddBias(a.0, bias.0), &[a.0, bias.0]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape("add", self.val(a), self.val(b))?;
        let mut out = self.val(a).clone();
        out.axpy(1.0, self.val(b));
        Ok(self.push(out, Op::Add(a.0, b.0), &[a.0, b.0]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape("sub", self.val(a), self.val(b))?;
        let mut out = self.val(a).clone();
        out.axpy(-1.0, self.val(b));
        Ok(self.push(out, Op::Sub(a.0, b.0), &[a.0, b.0]))
    }

    /// Elementwise `a / b`.
    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape("div", self.val(a), self.val(b))?;
        let data = self
            .val(a)
            .data()
            .iter()
            .zip(self.val(b).data())
            .map(|(x, y)| x / y)
            .collect();
        let (r, c) = self.val(a).shape();
        let out = Matrix::from_vec(r, c, data)?;
        Ok(self.push(out, Op::Div(a.0, b.0), &[a.0, b.0]))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let out = self.val(a).map(|x| x * s);
        self.push(out, Op::Scale(a.0, s), &[a.0])
    }

    /// `a + c` for a constant matrix `c` of the same shape.
    pub fn add_const(&mut self, a: Var, c: &Matrix) -> Result<Var> {
        same_shape("add_const", self.val(a), c)?;
        let mut out = self.val(a).clone();
        out.axpy(1.0, c);
        Ok(self.push(out, Op::AddConst(a.0), &[a.0]))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.val(a).map(|x| x.max(0.0));
        self.push(out, Op::Relu(a.0), &[a.0])
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let out = self.val(a).map(f64::exp);
        self.push(out, Op::Exp(a.0), &[a.0])
    }

    pub fn log(&mut self, a: Var) -> Var {
        let out = self.val(a).map(f64::ln);
        self.push(out, Op::Log(a.0), &[a.0])
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.val(a), self.val(b));
        if av.rows() != bv.rows() {
            return Err(Error::dim(
                "concat_cols",
                format!("{} rows vs {} rows", av.rows(), bv.rows()),
            ));
        }
        let mut out = Matrix::zeros(av.rows(), av.cols() + bv.cols());
        for r in 0..av.rows() {
            let (left, right) = out.row_mut(r).split_at_mut(av.cols());
            left.copy_from_slice(av.row(r));
            right.copy_from_slice(bv.row(r));
        }
        Ok(self.push(out, Op::ConcatCols(a.0, b.0), &[a.0, b.0]))
    }

    /// Divides each row by `max(‖row‖₂, eps)`.
    pub fn row_l2_normalize(&mut self, a: Var, eps: f64) -> Var {
        let mut out = self.val(a).clone();
        for r in 0..out.rows() {
            let row = out.row_mut(r);
            let n = row.iter().map(|x| x * x).sum::<f64>().sqrt().max(eps);
            row.iter_mut().for_each(|x| *x /= n);
        }
        self.push(out, Op::RowL2Normalize(a.0, eps), &[a.0])
    }

    /// `exp(scale · a · bᵀ)`; `a` and `b` may be the same variable.
    pub fn exp_similarity(&mut self, a: Var, b: Var, scale: f64) -> Result<Var> {
        let (av, bv) = (self.val(a), self.val(b));
        if av.cols() != bv.cols() {
            return Err(Error::dim(
                "exp_similarity",
                format!("{:?} vs {:?}", av.shape(), bv.shape()),
            ));
        }
        let mut out = Matrix::zeros(av.rows(), bv.rows());
        gemm(scale, av, false, bv, true, 0.0, &mut out);
        out.data_mut()
            .par_chunks_mut(PAR_CHUNK)
            .for_each(|c| c.iter_mut().for_each(|x| *x = x.exp()));
        Ok(self.push(out, Op::ExpSimilarity(a.0, b.0, scale), &[a.0, b.0]))
    }

    /// Column vector `out[i] = Σ_{j ∈ mask(i)} a[i][j]`.
    pub fn masked_row_sum(&mut self, a: Var, mask: RowMask) -> Result<Var> {
        let av = self.val(a);
        mask.check(av.rows(), av.cols(), "masked_row_sum")?;
        let mut out = Matrix::zeros(av.rows(), 1);
        for i in 0..av.rows() {
            let row = av.row(i);
            let mut s = 0.0;
            mask.for_each(i, av.cols(), |j| s += row[j]);
            out.set(i, 0, s);
        }
        Ok(self.push(out, Op::MaskedRowSum(a.0, mask), &[a.0]))
    }

    /// Column vector `out[i] = Σ_{j ∈ mask(i)} a[j][i]`.
    pub fn masked_col_sum(&mut self, a: Var, mask: RowMask) -> Result<Var> {
        let av = self.val(a);
        mask.check(av.cols(), av.rows(), "masked_col_sum")?;
        let mut out = Matrix::zeros(av.cols(), 1);
        if let RowMask::All = mask {
            for j in 0..av.rows() {
                for (s, x) in out.data_mut().iter_mut().zip(av.row(j)) {
                    *s += x;
                }
            }
        } else {
            for i in 0..av.cols() {
                let mut s = 0.0;
                mask.for_each(i, av.rows(), |j| s += av.get(j, i));
                out.set(i, 0, s);
            }
        }
        Ok(self.push(out, Op::MaskedColSum(a.0, mask), &[a.0]))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let out = Matrix::scalar(self.val(a).sum());
        self.push(out, Op::Sum(a.0), &[a.0])
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let v = self.val(a);
        let out = Matrix::scalar(v.sum() / v.len() as f64);
        self.push(out, Op::Mean(a.0), &[a.0])
    }

    pub fn softmax_cross_entropy(
        &mut self,
        logits: Var,
        targets: Arc<Vec<(usize, usize)>>,
    ) -> Result<Var> {
        let lv = self.val(logits);
        if targets.is_empty() {
            return Err(Error::dim("softmax_cross_entropy", "no targets"));
        }
        if let Some(&(r, c)) = targets
            .iter()
            .find(|&&(r, c)| r >= lv.rows() || c >= lv.cols())
        {
            return Err(Error::dim(
                "softmax_cross_entropy",
                format!("target ({r},{c}) outside logits {:?}", lv.shape()),
            ));
        }
        let mut total = 0.0;
        for &(r, c) in targets.iter() {
            let row = lv.row(r);
            total += log_sum_exp(row) - row[c];
        }
        let out = Matrix::scalar(total / targets.len() as f64);
        Ok(self.push(out, Op::SoftmaxCrossEntropy(logits.0, targets), &[logits.0]))
    }

    /// Propagates d`loss`/d(node) to every node that requires a gradient.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let shape = self.nodes[loss.0].value.shape();
        if shape != (1, 1) {
            return Err(Error::Contract(format!(
                "backward needs a 1x1 loss, got {shape:?}"
            )));
        }
        let mut grads: Vec<Option<Matrix>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Matrix::scalar(1.0));

        for id in (0..=loss.0).rev() {
            if !self.nodes[id].requires_grad {
                continue;
            }
            let Some(g) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            if let Op::Leaf = node.op {
                match &mut self.nodes[id].grad {
                    Some(acc) => acc.axpy(1.0, &g),
                    slot => *slot = Some(g),
                }
                continue;
            }
            self.propagate(id, g, &mut grads);
        }
        Ok(())
    }

    fn propagate(&self, id: usize, owned: Matrix, grads: &mut [Option<Matrix>]) {
        let g = &owned;
        let nodes = &self.nodes;
        let needs = |i: usize| nodes[i].requires_grad;
        let val = |i: usize| &nodes[i].value;
        fn slot<'a>(grads: &'a mut [Option<Matrix>], nodes: &[Node], i: usize) -> &'a mut Matrix {
            let (r, c) = nodes[i].value.shape();
            grads[i].get_or_insert_with(|| Matrix::zeros(r, c))
        }
        let out = &nodes[id].value;

        match &nodes[id].op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if needs(*a) {
                    gemm(1.0, g, false, val(*b), true, 1.0, slot(grads, nodes, *a));
                }
                if needs(*b) {
                    gemm(1.0, val(*a), true, g, false, 1.0, slot(grads, nodes, *b));
                }
            }
            Op::MatMulNt(a, b) => {
                if needs(*a) {
                    gemm(1.0, g, false, val(*b), false, 1.0, slot(grads, nodes, *a));
                }
                if needs(*b) {
                    gemm(1.0, g, true, val(*a), false, 1.0, slot(grads, nodes, *b));
                }
            }
            Op::Transpose(a) => {
                slot(grads, nodes, *a).axpy(1.0, &g.transpose());
            }
            Op::SparseMatMul(sp, b) => {
                sp.transpose_mul_dense_into(g, slot(grads, nodes, *b));
            }
            Op::AddBias(a, bias) => {
                if needs(*a) {
                    slot(grads, nodes, *a).axpy(1.0, g);
                }
                if needs(*bias) {
                    let acc = slot(grads, nodes, *bias);
                    for r in 0..g.rows() {
                        for (s, x) in acc.data_mut().iter_mut().zip(g.row(r)) {
                            *s += x;
                        }
                    }
                }
            }
            Op::Add(a, b) => {
                for i in [*a, *b] {
                    if needs(i) {
                        slot(grads, nodes, i).axpy(1.0, g);
                    }
                }
            }
            Op::Sub(a, b) => {
                if needs(*a) {
                    slot(grads, nodes, *a).axpy(1.0, g);
                }
                if needs(*b) {
                    slot(grads, nodes, *b).axpy(-1.0, g);
                }
            }
            Op::Div(a, b) => {
                let (av, bv) = (val(*a).data(), val(*b).data());
                if needs(*a) {
                    let acc = slot(grads, nodes, *a).data_mut();
                    for k in 0..acc.len() {
                        acc[k] += g.data()[k] / bv[k];
                    }
                }
                if needs(*b) {
                    let acc = slot(grads, nodes, *b).data_mut();
                    for k in 0..acc.len() {
                        acc[k] -= g.data()[k] * av[k] / (bv[k] * bv[k]);
                    }
                }
            }
            Op::Scale(a, s) => slot(grads, nodes, *a).axpy(*s, g),
            Op::AddConst(a) => slot(grads, nodes, *a).axpy(1.0, g),
            Op::Relu(a) => {
                let av = val(*a).data();
                let acc = slot(grads, nodes, *a).data_mut();
                for k in 0..acc.len() {
                    if av[k] > 0.0 {
                        acc[k] += g.data()[k];
                    }
                }
            }
            Op::Exp(a) => {
                let acc = slot(grads, nodes, *a).data_mut();
                for ((a, &gk), &ok) in acc.iter_mut().zip(g.data()).zip(out.data()) {
                    *a += gk * ok;
                }
            }
            Op::Log(a) => {
                let av = val(*a).data();
                let acc = slot(grads, nodes, *a).data_mut();
                for k in 0..acc.len() {
                    acc[k] += g.data()[k] / av[k];
                }
            }
            Op::ConcatCols(a, b) => {
                let split = val(*a).cols();
                if needs(*a) {
                    let acc = slot(grads, nodes, *a);
                    for r in 0..g.rows() {
                        for (s, x) in acc.row_mut(r).iter_mut().zip(&g.row(r)[..split]) {
                            *s += x;
                        }
                    }
                }
                if needs(*b) {
                    let acc = slot(grads, nodes, *b);
                    for r in 0..g.rows() {
                        for (s, x) in acc.row_mut(r).iter_mut().zip(&g.row(r)[split..]) {
                            *s += x;
                        }
                    }
                }
            }
            Op::RowL2Normalize(a, eps) => {
                let x = val(*a);
                let acc = slot(grads, nodes, *a);
                for r in 0..x.rows() {
                    let norm = x.row(r).iter().map(|v| v * v).sum::<f64>().sqrt();
                    let (gr, yr) = (g.row(r), out.row(r));
                    let arow = acc.row_mut(r);
                    if norm > *eps {
                        let dot: f64 = gr.iter().zip(yr).map(|(a, b)| a * b).sum();
                        for k in 0..arow.len() {
                            arow[k] += (gr[k] - yr[k] * dot) / norm;
                        }
                    } else {
                        for k in 0..arow.len() {
                            arow[k] += gr[k] / eps;
                        }
                    }
                }
            }
            Op::ExpSimilarity(a, b, scale) => {
                let mut dp = owned;
                dp.data_mut()
                    .par_chunks_mut(PAR_CHUNK)
                    .zip(out.data().par_chunks(PAR_CHUNK))
                    .for_each(|(d, e)| d.iter_mut().zip(e).for_each(|(d, e)| *d *= e * scale));
                if a == b {
                    // d(Y Yᵀ) contributes (dP + dPᵀ) Y
                    symmetrize_in_place(&mut dp);
                    gemm(1.0, &dp, false, val(*a), false, 1.0, slot(grads, nodes, *a));
                    return;
                }
                if needs(*a) {
                    gemm(1.0, &dp, false, val(*b), false, 1.0, slot(grads, nodes, *a));
                }
                if needs(*b) {
                    gemm(1.0, &dp, true, val(*a), false, 1.0, slot(grads, nodes, *b));
                }
            }
            Op::MaskedRowSum(a, mask) => {
                let cols = val(*a).cols();
                let acc = slot(grads, nodes, *a);
                for i in 0..g.rows() {
                    let gi = g.get(i, 0);
                    let row = acc.row_mut(i);
                    mask.for_each(i, cols, |j| row[j] += gi);
                }
            }
            Op::MaskedColSum(a, RowMask::All) => {
                let acc = slot(grads, nodes, *a);
                for j in 0..acc.rows() {
                    for (x, gi) in acc.row_mut(j).iter_mut().zip(g.data()) {
                        *x += gi;
                    }
                }
            }
            Op::MaskedColSum(a, mask) => {
                let rows = val(*a).rows();
                let acc = slot(grads, nodes, *a);
                for i in 0..g.rows() {
                    let gi = g.get(i, 0);
                    mask.for_each(i, rows, |j| {
                        let v = acc.get(j, i) + gi;
                        acc.set(j, i, v);
                    });
                }
            }
            Op::Sum(a) => {
                let s = g.get(0, 0);
                slot(grads, nodes, *a)
                    .data_mut()
                    .iter_mut()
                    .for_each(|x| *x += s);
            }
            Op::Mean(a) => {
                let s = g.get(0, 0) / val(*a).len() as f64;
                slot(grads, nodes, *a)
                    .data_mut()
                    .iter_mut()
                    .for_each(|x| *x += s);
            }
            Op::SoftmaxCrossEntropy(a, targets) => {
                let logits = val(*a);
                let s = g.get(0, 0) / targets.len() as f64;
                let acc = slot(grads, nodes, *a);
                for &(r, c) in targets.iter() {
                    let row = logits.row(r);
                    let lse = log_sum_exp(row);
                    let arow = acc.row_mut(r);
                    for k in 0..row.len() {
                        arow[k] += s * (row[k] - lse).exp();
                    }
                    arow[c] -= s;
                }
            }
        }
    }
}

/// `m ← m + mᵀ` for a square matrix, in cache-sized tiles.
fn symmetrize_in_place(m: &mut Matrix) {
    const TILE: usize = 64;
    let n = m.rows();
    let d = m.data_mut();
    for bi in (0..n).step_by(TILE) {
        for bj in (bi..n).step_by(TILE) {
            for i in bi..(bi + TILE).min(n) {
                let start = if bi == bj { i } else { bj };
                for j in start..(bj + TILE).min(n) {
                    let s = d[i * n + j] + d[j * n + i];
                    d[i * n + j] = s;
                    d[j * n + i] = s;
                }
            }
        }
    }
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + row.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
