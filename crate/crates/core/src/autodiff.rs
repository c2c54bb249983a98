//! Tape-based reverse-mode automatic differentiation.
//!
//! Every operation on a [`Var`] evaluates eagerly and appends one node to the
//! owning [`Tape`]. Parents always have smaller ids than their children, so the
//! tape order is already a topological order and [`Tape::backward`] is a single
//! reverse sweep.

use std::cell::{Ref, RefCell};
use std::rc::Rc;

use crate::error::{dim_err, Error, Result};
use crate::tensor::{gemm, softmax_in_place, Tensor};

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(usize, usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    AddRow(usize, usize),
    Relu(usize),
    Sigmoid(usize),
    Log(usize),
    Affine(usize, f64),
    Powf(usize, f64),
    Sum(usize),
    Mean(usize),
    GatherRows(usize, Rc<[usize]>),
    ScatterAddRows(usize, Rc<[usize]>),
    MulRows(usize, usize),
    Propagate {
        h: usize,
        w: usize,
        src: Rc<[usize]>,
        dst: Rc<[usize]>,
    },
    ConcatCols(usize, usize),
    SegmentMean(usize, Rc<[(usize, usize)]>),
    CrossEntropy(usize, Rc<[usize]>),
    SoftCrossEntropy(usize, Rc<Tensor>),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Records operations for one forward/backward pass.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: usize,
}

/// Adjoints produced by [`Tape::backward`], indexed by tape node.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn wrt(&self, v: Var<'_>) -> Option<&Tensor> {
        self.grads.get(v.id).and_then(|g| g.as_ref())
    }

    /// Gradient of `v`, or zeros of the right shape when nothing reached it.
    pub fn wrt_or_zeros(&self, v: Var<'_>) -> Tensor {
        match self.wrt(v) {
            Some(g) => g.clone(),
            None => v.value().zeros_like(),
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Trainable leaf: gradients flow into it.
    pub fn param(&self, value: Tensor) -> Var<'_> {
        self.push(value, Op::Leaf, true)
    }

    /// Non-trainable leaf.
    pub fn constant(&self, value: Tensor) -> Var<'_> {
        self.push(value, Op::Leaf, false)
    }

    fn push(&self, value: Tensor, op: Op, needs_grad: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    fn needs(&self, ids: &[usize]) -> bool {
        let nodes = self.nodes.borrow();
        ids.iter().any(|&i| nodes[i].needs_grad)
    }

    /// Reverse sweep from a scalar root.
    pub fn backward(&self, root: Var<'_>) -> Result<Gradients> {
        let nodes = self.nodes.borrow();
        if !nodes[root.id].value.is_scalar() {
            return Err(Error::Contract(format!(
                "backward root must be scalar, got shape {:?}",
                nodes[root.id].value.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; root.id + 1];
        grads[root.id] = Some(Tensor::new(nodes[root.id].value.shape().to_vec(), vec![1.0])?);

        for id in (0..=root.id).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &nodes[id];
            if !node.needs_grad {
                continue;
            }
            backprop_node(&nodes, node, &g, &mut grads);
            grads[id] = Some(g);
        }
        Ok(Gradients { grads })
    }
}

fn accumulate(grads: &mut [Option<Tensor>], nodes: &[Node], id: usize, g: Tensor) {
    if !nodes[id].needs_grad {
        return;
    }
    match &mut grads[id] {
        Some(acc) => acc.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

/// Reduces a broadcast gradient back to a scalar operand when needed.
fn unbroadcast(g: &Tensor, target: &Tensor) -> Tensor {
    if target.is_scalar() && !g.is_scalar() {
        Tensor::new(target.shape().to_vec(), vec![g.sum()]).expect("scalar shape")
    } else {
        g.clone()
    }
}

fn backprop_node(nodes: &[Node], node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) {
    let val = |i: usize| &nodes[i].value;
    match &node.op {
        Op::Leaf => {}
        Op::MatMul(a, b) => {
            let (m, k) = val(*a).dims2();
            let n = val(*b).cols();
            if nodes[*a].needs_grad {
                let mut da = vec![0.0; m * k];
                gemm(m, n, k, g.data(), false, val(*b).data(), true, &mut da, 0.0);
                accumulate(grads, nodes, *a, Tensor::matrix(m, k, da).unwrap());
            }
            if nodes[*b].needs_grad {
                let mut db = vec![0.0; k * n];
                gemm(k, m, n, val(*a).data(), true, g.data(), false, &mut db, 0.0);
                accumulate(grads, nodes, *b, Tensor::matrix(k, n, db).unwrap());
            }
        }
        Op::Add(a, b) => {
            accumulate(grads, nodes, *a, unbroadcast(g, val(*a)));
            accumulate(grads, nodes, *b, unbroadcast(g, val(*b)));
        }
        Op::Sub(a, b) => {
            accumulate(grads, nodes, *a, unbroadcast(g, val(*a)));
            accumulate(grads, nodes, *b, unbroadcast(&g.map(|v| -v), val(*b)));
        }
        Op::Mul(a, b) => {
            let (va, vb) = (val(*a), val(*b));
            if nodes[*a].needs_grad {
                let da = broadcast_mul(g, vb);
                accumulate(grads, nodes, *a, unbroadcast(&da, va));
            }
            if nodes[*b].needs_grad {
                let db = broadcast_mul(g, va);
                accumulate(grads, nodes, *b, unbroadcast(&db, vb));
            }
        }
        Op::AddRow(a, row) => {
            accumulate(grads, nodes, *a, g.clone());
            if nodes[*row].needs_grad {
                let (r, c) = g.dims2();
                let mut dr = vec![0.0; c];
                for i in 0..r {
                    for (d, &x) in dr.iter_mut().zip(g.row(i)) {
                        *d += x;
                    }
                }
                let shape = val(*row).shape().to_vec();
                accumulate(grads, nodes, *row, Tensor::new(shape, dr).unwrap());
            }
        }
        Op::Relu(a) => {
            let da = g.zip_map(val(*a), |g, x| if x > 0.0 { g } else { 0.0 }).unwrap();
            accumulate(grads, nodes, *a, da);
        }
        Op::Sigmoid(a) => {
            let da = g.zip_map(&node.value, |g, s| g * s * (1.0 - s)).unwrap();
            accumulate(grads, nodes, *a, da);
        }
        Op::Log(a) => {
            let da = g.zip_map(val(*a), |g, x| g / x).unwrap();
            accumulate(grads, nodes, *a, da);
        }
        Op::Affine(a, scale) => {
            accumulate(grads, nodes, *a, g.map(|v| v * scale));
        }
        Op::Powf(a, p) => {
            let da = g
                .zip_map(val(*a), |g, x| g * p * x.powf(p - 1.0))
                .unwrap();
            accumulate(grads, nodes, *a, da);
        }
        Op::Sum(a) => {
            let gv = g.item();
            accumulate(grads, nodes, *a, val(*a).map(|_| gv));
        }
        Op::Mean(a) => {
            let n = val(*a).len().max(1) as f64;
            let gv = g.item() / n;
            accumulate(grads, nodes, *a, val(*a).map(|_| gv));
        }
        Op::GatherRows(a, idx) => {
            let src = val(*a);
            let c = src.cols();
            let mut da = src.zeros_like();
            let d = da.data_mut();
            for (out_row, &i) in idx.iter().enumerate() {
                for j in 0..c {
                    d[i * c + j] += g.data()[out_row * c + j];
                }
            }
            accumulate(grads, nodes, *a, da);
        }
        Op::ScatterAddRows(a, idx) => {
            let src = val(*a);
            let c = src.cols();
            let mut da = src.zeros_like();
            let d = da.data_mut();
            for (in_row, &i) in idx.iter().enumerate() {
                d[in_row * c..(in_row + 1) * c].copy_from_slice(&g.data()[i * c..(i + 1) * c]);
            }
            accumulate(grads, nodes, *a, da);
        }
        Op::MulRows(a, s) => {
            let (va, vs) = (val(*a), val(*s));
            let c = va.cols();
            if nodes[*a].needs_grad {
                let mut da = va.zeros_like();
                for (i, &sv) in vs.data().iter().enumerate() {
                    for j in 0..c {
                        da.data_mut()[i * c + j] = g.data()[i * c + j] * sv;
                    }
                }
                accumulate(grads, nodes, *a, da);
            }
            if nodes[*s].needs_grad {
                let ds: Vec<f64> = (0..vs.len())
                    .map(|i| dot(&g.data()[i * c..(i + 1) * c], va.row(i)))
                    .collect();
                accumulate(grads, nodes, *s, Tensor::new(vs.shape().to_vec(), ds).unwrap());
            }
        }
        Op::Propagate { h, w, src, dst } => {
            let (vh, vw) = (val(*h), val(*w));
            let c = vh.cols();
            if nodes[*h].needs_grad {
                let mut dh = vh.zeros_like();
                let d = dh.data_mut();
                for e in 0..src.len() {
                    let we = vw.data()[e];
                    let (s, t) = (src[e], dst[e]);
                    for j in 0..c {
                        d[s * c + j] += we * g.data()[t * c + j];
                    }
                }
                accumulate(grads, nodes, *h, dh);
            }
            if nodes[*w].needs_grad {
                let dw: Vec<f64> = (0..src.len())
                    .map(|e| dot(&g.data()[dst[e] * c..(dst[e] + 1) * c], vh.row(src[e])))
                    .collect();
                accumulate(grads, nodes, *w, Tensor::new(vw.shape().to_vec(), dw).unwrap());
            }
        }
        Op::ConcatCols(a, b) => {
            let (va, vb) = (val(*a), val(*b));
            let (r, ca) = va.dims2();
            let cb = vb.cols();
            let mut da = Vec::with_capacity(r * ca);
            let mut db = Vec::with_capacity(r * cb);
            for i in 0..r {
                let row = g.row(i);
                da.extend_from_slice(&row[..ca]);
                db.extend_from_slice(&row[ca..]);
            }
            accumulate(grads, nodes, *a, Tensor::matrix(r, ca, da).unwrap());
            accumulate(grads, nodes, *b, Tensor::matrix(r, cb, db).unwrap());
        }
        Op::SegmentMean(a, ranges) => {
            let va = val(*a);
            let c = va.cols();
            let mut da = va.zeros_like();
            for (gi, &(lo, hi)) in ranges.iter().enumerate() {
                if hi == lo {
                    continue;
                }
                let inv = 1.0 / (hi - lo) as f64;
                for i in lo..hi {
                    for j in 0..c {
                        da.data_mut()[i * c + j] = g.data()[gi * c + j] * inv;
                    }
                }
            }
            accumulate(grads, nodes, *a, da);
        }
        Op::CrossEntropy(a, targets) => {
            let logits = val(*a);
            let (r, c) = logits.dims2();
            let scale = g.item() / r as f64;
            let mut da = logits.softmax_rows();
            for (i, &t) in targets.iter().enumerate() {
                da.data_mut()[i * c + t] -= 1.0;
            }
            accumulate(grads, nodes, *a, da.map(|v| v * scale));
        }
        Op::SoftCrossEntropy(a, target) => {
            let logits = val(*a);
            let (r, c) = logits.dims2();
            let scale = g.item() / r as f64;
            let sm = logits.softmax_rows();
            let mut da = logits.zeros_like();
            for i in 0..r {
                let mass: f64 = target.row(i).iter().sum();
                for j in 0..c {
                    da.data_mut()[i * c + j] =
                        scale * (sm.get(i, j) * mass - target.get(i, j));
                }
            }
            accumulate(grads, nodes, *a, da);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn broadcast_mul(g: &Tensor, other: &Tensor) -> Tensor {
    if other.is_scalar() {
        let s = other.item();
        g.map(|v| v * s)
    } else {
        g.zip_map(other, |a, b| a * b).unwrap()
    }
}

fn broadcast_binary(
    op: &'static str,
    a: &Tensor,
    b: &Tensor,
    f: impl Fn(f64, f64) -> f64,
) -> Result<Tensor> {
    if a.shape() == b.shape() {
        a.zip_map(b, f)
    } else if b.is_scalar() {
        let s = b.item();
        Ok(a.map(|x| f(x, s)))
    } else if a.is_scalar() {
        let s = a.item();
        Ok(b.map(|x| f(s, x)))
    } else {
        Err(dim_err(op, format!("{:?} vs {:?}", a.shape(), b.shape())))
    }
}

impl<'t> Var<'t> {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn value(&self) -> Ref<'t, Tensor> {
        Ref::map(self.tape.nodes.borrow(), |n| &n[self.id].value)
    }

    pub fn to_tensor(&self) -> Tensor {
        self.value().clone()
    }

    pub fn item(&self) -> f64 {
        self.value().item()
    }

    fn same_tape(&self, other: Var<'t>) {
        assert!(
            std::ptr::eq(self.tape, other.tape),
            "vars from different tapes"
        );
    }

    fn unary(self, op: Op, f: impl FnOnce(&Tensor) -> Tensor) -> Var<'t> {
        let out = f(&self.value());
        let needs = self.tape.needs(&[self.id]);
        self.tape.push(out, op, needs)
    }

    fn binary(
        self,
        other: Var<'t>,
        op: Op,
        f: impl FnOnce(&Tensor, &Tensor) -> Result<Tensor>,
    ) -> Result<Var<'t>> {
        self.same_tape(other);
        let out = f(&self.value(), &other.value())?;
        let needs = self.tape.needs(&[self.id, other.id]);
        Ok(self.tape.push(out, op, needs))
    }

    pub fn matmul(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(other, Op::MatMul(self.id, other.id), |a, b| a.matmul(b))
    }

    /// Elementwise sum; either side may be a scalar.
    pub fn add(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(other, Op::Add(self.id, other.id), |a, b| {
            broadcast_binary("add", a, b, |x, y| x + y)
        })
    }

    pub fn sub(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(other, Op::Sub(self.id, other.id), |a, b| {
            broadcast_binary("sub", a, b, |x, y| x - y)
        })
    }

    pub fn mul(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(other, Op::Mul(self.id, other.id), |a, b| {
            broadcast_binary("mul", a, b, |x, y| x * y)
        })
    }

    /// Adds a `[1 x c]` row to every row of a `[r x c]` matrix.
    pub fn add_row(self, row: Var<'t>) -> Result<Var<'t>> {
        self.binary(row, Op::AddRow(self.id, row.id), |a, b| {
            let (r, c) = a.dims2();
            if b.len() != c {
                return Err(dim_err("add_row", format!("{:?} + row {:?}", a.shape(), b.shape())));
            }
            let mut out = a.clone();
            for i in 0..r {
                for (o, &x) in out.data_mut()[i * c..(i + 1) * c].iter_mut().zip(b.data()) {
                    *o += x;
                }
            }
            Ok(out)
        })
    }

    pub fn relu(self) -> Var<'t> {
        self.unary(Op::Relu(self.id), |a| a.map(|x| if x > 0.0 { x } else { 0.0 }))
    }

    pub fn sigmoid(self) -> Var<'t> {
        self.unary(Op::Sigmoid(self.id), |a| a.map(sigmoid))
    }

    /// Natural log. Inputs must be positive.
    pub fn ln(self) -> Var<'t> {
        self.unary(Op::Log(self.id), |a| a.map(f64::ln))
    }

    /// `scale * x + shift`
    pub fn affine(self, scale: f64, shift: f64) -> Var<'t> {
        self.unary(Op::Affine(self.id, scale), |a| a.map(|x| scale * x + shift))
    }

    pub fn powf(self, p: f64) -> Var<'t> {
        self.unary(Op::Powf(self.id, p), |a| a.map(|x| x.powf(p)))
    }

    pub fn sum(self) -> Var<'t> {
        self.unary(Op::Sum(self.id), |a| Tensor::scalar(a.sum()))
    }

    pub fn mean(self) -> Var<'t> {
        self.unary(Op::Mean(self.id), |a| {
            Tensor::scalar(if a.is_empty() { 0.0 } else { a.sum() / a.len() as f64 })
        })
    }

    /// `out[i] = self[idx[i]]` row-wise.
    pub fn gather_rows(self, idx: Rc<[usize]>) -> Result<Var<'t>> {
        let (r, c) = self.value().dims2();
        if let Some(&bad) = idx.iter().find(|&&i| i >= r) {
            return Err(Error::Index {
                what: "gather_rows",
                index: bad,
                len: r,
            });
        }
        let out = {
            let v = self.value();
            let mut data = Vec::with_capacity(idx.len() * c);
            for &i in idx.iter() {
                data.extend_from_slice(v.row(i));
            }
            Tensor::matrix(idx.len(), c, data)?
        };
        let needs = self.tape.needs(&[self.id]);
        Ok(self.tape.push(out, Op::GatherRows(self.id, idx), needs))
    }

    /// `out[idx[i]] += self[i]` into `rows` output rows.
    pub fn scatter_add_rows(self, idx: Rc<[usize]>, rows: usize) -> Result<Var<'t>> {
        let (r, c) = self.value().dims2();
        if idx.len() != r {
            return Err(dim_err("scatter_add_rows", format!("{} indices for {} rows", idx.len(), r)));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= rows) {
            return Err(Error::Index {
                what: "scatter_add_rows",
                index: bad,
                len: rows,
            });
        }
        let out = {
            let v = self.value();
            let mut out = Tensor::zeros(rows, c);
            for (i, &t) in idx.iter().enumerate() {
                for j in 0..c {
                    out.data_mut()[t * c + j] += v.data()[i * c + j];
                }
            }
            out
        };
        let needs = self.tape.needs(&[self.id]);
        Ok(self.tape.push(out, Op::ScatterAddRows(self.id, idx), needs))
    }

    /// Scales row `i` by `scales[i]` (`scales` is `[r x 1]`).
    pub fn mul_rows(self, scales: Var<'t>) -> Result<Var<'t>> {
        self.binary(scales, Op::MulRows(self.id, scales.id), |a, s| {
            let (r, c) = a.dims2();
            if s.len() != r {
                return Err(dim_err("mul_rows", format!("{:?} by {:?}", a.shape(), s.shape())));
            }
            let mut out = a.clone();
            for (i, &sv) in s.data().iter().enumerate() {
                for o in &mut out.data_mut()[i * c..(i + 1) * c] {
                    *o *= sv;
                }
            }
            Ok(out)
        })
    }

    /// Weighted message passing: `out[dst[e]] += w[e] * self[src[e]]`.
    pub fn propagate(self, weights: Var<'t>, src: Rc<[usize]>, dst: Rc<[usize]>) -> Result<Var<'t>> {
        self.same_tape(weights);
        let out = {
            let h = self.value();
            let w = weights.value();
            let (n, c) = h.dims2();
            if src.len() != dst.len() || w.len() != src.len() {
                return Err(dim_err(
                    "propagate",
                    format!("{} src, {} dst, {} weights", src.len(), dst.len(), w.len()),
                ));
            }
            if let Some(&bad) = src.iter().chain(dst.iter()).find(|&&i| i >= n) {
                return Err(Error::Index {
                    what: "propagate endpoint",
                    index: bad,
                    len: n,
                });
            }
            let mut out = Tensor::zeros(n, c);
            let od = out.data_mut();
            for e in 0..src.len() {
                let we = w.data()[e];
                if we == 0.0 {
                    continue;
                }
                let hs = h.row(src[e]);
                let t = dst[e] * c;
                for j in 0..c {
                    od[t + j] += we * hs[j];
                }
            }
            out
        };
        let needs = self.tape.needs(&[self.id, weights.id]);
        Ok(self.tape.push(
            out,
            Op::Propagate {
                h: self.id,
                w: weights.id,
                src,
                dst,
            },
            needs,
        ))
    }

    pub fn concat_cols(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(other, Op::ConcatCols(self.id, other.id), |a, b| {
            let (r, ca) = a.dims2();
            let (rb, cb) = b.dims2();
            if r != rb {
                return Err(dim_err("concat_cols", format!("{r} vs {rb} rows")));
            }
            let mut data = Vec::with_capacity(r * (ca + cb));
            for i in 0..r {
                data.extend_from_slice(a.row(i));
                data.extend_from_slice(b.row(i));
            }
            Tensor::matrix(r, ca + cb, data)
        })
    }

    /// Mean over each `[lo, hi)` row range; an empty range yields a zero row.
    pub fn segment_mean(self, ranges: Rc<[(usize, usize)]>) -> Result<Var<'t>> {
        let out = {
            let v = self.value();
            let (r, c) = v.dims2();
            let mut out = Tensor::zeros(ranges.len(), c);
            for (gi, &(lo, hi)) in ranges.iter().enumerate() {
                if lo > hi || hi > r {
                    return Err(dim_err("segment_mean", format!("range {lo}..{hi} of {r} rows")));
                }
                if hi == lo {
                    continue;
                }
                let inv = 1.0 / (hi - lo) as f64;
                for i in lo..hi {
                    for j in 0..c {
                        out.data_mut()[gi * c + j] += v.data()[i * c + j] * inv;
                    }
                }
            }
            out
        };
        let needs = self.tape.needs(&[self.id]);
        Ok(self.tape.push(out, Op::SegmentMean(self.id, ranges), needs))
    }

    /// Mean softmax cross-entropy of `[g x c]` logits against class indices.
    pub fn cross_entropy(self, targets: &[usize]) -> Result<Var<'t>> {
        let loss = {
            let logits = self.value();
            let (r, c) = logits.dims2();
            if targets.len() != r {
                return Err(dim_err("cross_entropy", format!("{} targets for {r} rows", targets.len())));
            }
            let mut total = 0.0;
            for (i, &t) in targets.iter().enumerate() {
                if t >= c {
                    return Err(Error::Index {
                        what: "target class",
                        index: t,
                        len: c,
                    });
                }
                let row = logits.row(i);
                total += log_sum_exp(row) - row[t];
            }
            total / r.max(1) as f64
        };
        let needs = self.tape.needs(&[self.id]);
        Ok(self.tape.push(
            Tensor::scalar(loss),
            Op::CrossEntropy(self.id, targets.into()),
            needs,
        ))
    }

    /// Mean of `-sum_c p_c log softmax(logits)_c` for a target distribution per row.
    pub fn soft_cross_entropy(self, target: &Tensor) -> Result<Var<'t>> {
        let loss = {
            let logits = self.value();
            logits.check_same_shape(target, "soft_cross_entropy")?;
            let (r, c) = logits.dims2();
            let mut total = 0.0;
            for i in 0..r {
                let row = logits.row(i);
                let lse = log_sum_exp(row);
                for j in 0..c {
                    total -= target.get(i, j) * (row[j] - lse);
                }
            }
            total / r.max(1) as f64
        };
        let needs = self.tape.needs(&[self.id]);
        Ok(self.tape.push(
            Tensor::scalar(loss),
            Op::SoftCrossEntropy(self.id, Rc::new(target.clone())),
            needs,
        ))
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Loss of a single logit vector against one class, with its gradient
/// `softmax - one_hot(target)`.
pub fn softmax_cross_entropy(logits: &[f64], target: usize) -> Result<(f64, Vec<f64>)> {
    if target >= logits.len() {
        return Err(Error::Index {
            what: "target class",
            index: target,
            len: logits.len(),
        });
    }
    let loss = log_sum_exp(logits) - logits[target];
    let mut grad = logits.to_vec();
    softmax_in_place(&mut grad);
    grad[target] -= 1.0;
    Ok((loss, grad))
}
