//! Minimal reverse-mode differentiation over dense tensors.
//!
//! A [`Graph`] is an append-only arena: every builder call evaluates its
//! node eagerly and returns a [`NodeId`]. Because nodes can only refer to
//! earlier nodes, insertion order is a topological order, so both
//! re-evaluation and the backward sweep are single linear passes.

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Floor applied inside [`Graph::log_clamped`].
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    Leaf,
    /// `x · W + b`, with `x` either `[in]` or `[points, in]`.
    Affine { x: NodeId, w: NodeId, b: NodeId },
    Relu(NodeId),
    /// Softmax over the last axis.
    Softmax(NodeId),
    LogClamped(NodeId),
    Mul(NodeId, NodeId),
    Outer(NodeId, NodeId),
    /// Column-wise max over the point (first) axis of a `[points, channels]` input.
    ReduceMax(NodeId),
    ReduceSum(NodeId),
    Scale(NodeId, f64),
    Add(NodeId, NodeId),
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Affine { .. } => "affine",
            Op::Relu(_) => "relu",
            Op::Softmax(_) => "softmax",
            Op::LogClamped(_) => "log_clamped",
            Op::Mul(..) => "elementwise_mul",
            Op::Outer(..) => "outer_product",
            Op::ReduceMax(_) => "reduce_max",
            Op::ReduceSum(_) => "reduce_sum",
            Op::Scale(..) => "scale_by_constant",
            Op::Add(..) => "add",
        }
    }

    fn inputs(&self) -> Vec<NodeId> {
        match *self {
            Op::Leaf => Vec::new(),
            Op::Affine { x, w, b } => vec![x, w, b],
            Op::Relu(a) | Op::Softmax(a) | Op::LogClamped(a) | Op::ReduceMax(a) | Op::ReduceSum(a) => {
                vec![a]
            }
            Op::Scale(a, _) => vec![a],
            Op::Mul(a, b) | Op::Outer(a, b) | Op::Add(a, b) => vec![a, b],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Node {
    op: Op,
    value: Tensor,
    /// Argmax row per column, only populated for `ReduceMax`.
    argmax: Vec<usize>,
}

impl Node {
    pub fn op(&self) -> &Op {
        &self.op
    }

    pub fn value(&self) -> &Tensor {
        &self.value
    }
}

/// Adjoints produced by [`Graph::backward`], indexed by node.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    adjoints: Vec<Tensor>,
}

impl Gradients {
    pub fn get(&self, id: NodeId) -> &Tensor {
        &self.adjoints[id.0]
    }

    pub fn take(&mut self, id: NodeId) -> Tensor {
        std::mem::replace(&mut self.adjoints[id.0], Tensor::scalar(0.0))
    }
}

#[derive(Debug, Clone, Default)]
pub struct Graph {
    nodes: Vec<Node>,
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

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn leaf(&mut self, value: Tensor) -> NodeId {
        self.nodes.push(Node {
            op: Op::Leaf,
            value,
            argmax: Vec::new(),
        });
        NodeId(self.nodes.len() - 1)
    }

    /// Copies the current value of `id` into a fresh leaf, cutting gradient flow.
    pub fn detach(&mut self, id: NodeId) -> NodeId {
        let value = self.value(id).clone();
        self.leaf(value)
    }

    /// Replaces the value of a leaf. Downstream nodes are refreshed by [`Graph::eval`].
    pub fn set_leaf(&mut self, id: NodeId, value: Tensor) -> Result<()> {
        let node = &mut self.nodes[id.0];
        if node.op != Op::Leaf {
            return Err(Error::InvalidArgument(format!(
                "node {} is `{}`, not a leaf",
                id.0,
                node.op.name()
            )));
        }
        if node.value.shape() != value.shape() {
            return Err(Error::shape(
                "set_leaf",
                format!("{:?} vs {:?}", node.value.shape(), value.shape()),
            ));
        }
        node.value = value;
        Ok(())
    }

    fn push(&mut self, op: Op) -> Result<NodeId> {
        let (value, argmax) = self.compute(&op)?;
        self.nodes.push(Node { op, value, argmax });
        Ok(NodeId(self.nodes.len() - 1))
    }

    pub fn affine(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        self.push(Op::Affine { x, w, b })
    }

    pub fn relu(&mut self, a: NodeId) -> Result<NodeId> {
        self.push(Op::Relu(a))
    }

    pub fn softmax(&mut self, a: NodeId) -> Result<NodeId> {
        self.push(Op::Softmax(a))
    }

    pub fn log_clamped(&mut self, a: NodeId) -> Result<NodeId> {
        self.push(Op::LogClamped(a))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.push(Op::Mul(a, b))
    }

    pub fn outer(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.push(Op::Outer(a, b))
    }

    pub fn reduce_max(&mut self, a: NodeId) -> Result<NodeId> {
        self.push(Op::ReduceMax(a))
    }

    pub fn reduce_sum(&mut self, a: NodeId) -> Result<NodeId> {
        self.push(Op::ReduceSum(a))
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> Result<NodeId> {
        self.push(Op::Scale(a, factor))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.push(Op::Add(a, b))
    }

    /// Re-evaluates every node up to `root` from the current leaf values.
    pub fn eval(&mut self, root: NodeId) -> Result<Tensor> {
        for i in 0..=root.0 {
            let op = self.nodes[i].op.clone();
            if op == Op::Leaf {
                continue;
            }
            let (value, argmax) = self.compute(&op)?;
            let node = &mut self.nodes[i];
            node.value = value;
            node.argmax = argmax;
        }
        Ok(self.value(root).clone())
    }

    fn compute(&self, op: &Op) -> Result<(Tensor, Vec<usize>)> {
        if let Some(bad) = op.inputs().into_iter().find(|id| id.0 >= self.nodes.len()) {
            return Err(Error::InvalidArgument(format!(
                "`{}` refers to missing node {}",
                op.name(),
                bad.0
            )));
        }
        let v = |id: NodeId| &self.nodes[id.0].value;
        let out = match *op {
            Op::Leaf => unreachable!("leaves are not computed"),
            Op::Affine { x, w, b } => affine_forward(v(x), v(w), v(b))?,
            Op::Relu(a) => map(v(a), |x| x.max(0.0)),
            Op::Softmax(a) => softmax_forward(v(a)),
            Op::LogClamped(a) => map(v(a), |x| x.max(LOG_FLOOR).ln()),
            Op::Mul(a, b) => {
                let (a, b) = (v(a), v(b));
                same_shape("elementwise_mul", a, b)?;
                zip(a, b, |x, y| x * y)
            }
            Op::Outer(a, b) => outer_forward(v(a), v(b))?,
            Op::ReduceMax(a) => return reduce_max_forward(v(a)),
            Op::ReduceSum(a) => Tensor::scalar(v(a).sum()),
            Op::Scale(a, c) => map(v(a), |x| c * x),
            Op::Add(a, b) => {
                let (a, b) = (v(a), v(b));
                same_shape("add", a, b)?;
                zip(a, b, |x, y| x + y)
            }
        };
        Ok((out, Vec::new()))
    }

    /// Reverse sweep from a scalar root; returns `d root / d node` for every node.
    pub fn backward(&self, root: NodeId) -> Result<Gradients> {
        let root_value = self.value(root);
        if !root_value.is_scalar() {
            return Err(Error::NonScalarRoot(root_value.shape().to_vec()));
        }
        let mut adjoints: Vec<Tensor> = self.nodes[..=root.0]
            .iter()
            .map(|n| Tensor::zeros(n.value.shape()))
            .collect();
        let mut reached = vec![false; root.0 + 1];
        adjoints[root.0].fill(1.0);
        reached[root.0] = true;

        for i in (0..=root.0).rev() {
            if !reached[i] {
                continue;
            }
            let node = &self.nodes[i];
            if node.op == Op::Leaf {
                continue;
            }
            let upstream = std::mem::replace(&mut adjoints[i], Tensor::scalar(0.0));
            self.propagate(node, &upstream, &mut adjoints);
            for input in node.op.inputs() {
                reached[input.0] = true;
            }
            adjoints[i] = upstream;
        }
        Ok(Gradients { adjoints })
    }

    fn propagate(&self, node: &Node, dy: &Tensor, adj: &mut [Tensor]) {
        let v = |id: NodeId| &self.nodes[id.0].value;
        match node.op {
            Op::Leaf => {}
            Op::Affine { x, w, b } => {
                let (xv, wv) = (v(x), v(w));
                let inputs = wv.shape()[0];
                let outputs = wv.shape()[1];
                let rows = xv.len() / inputs;
                let (xd, wd, dyd) = (xv.data(), wv.data(), dy.data());
                for p in 0..rows {
                    let dy_row = &dyd[p * outputs..(p + 1) * outputs];
                    if dy_row.iter().all(|&g| g == 0.0) {
                        continue;
                    }
                    let x_row = &xd[p * inputs..(p + 1) * inputs];
                    {
                        let dx = &mut adj[x.0].data_mut()[p * inputs..(p + 1) * inputs];
                        for (i, dxi) in dx.iter_mut().enumerate() {
                            let w_row = &wd[i * outputs..(i + 1) * outputs];
                            *dxi += dot(w_row, dy_row);
                        }
                    }
                    {
                        let dw = adj[w.0].data_mut();
                        for (i, &xi) in x_row.iter().enumerate() {
                            if xi == 0.0 {
                                continue;
                            }
                            let dw_row = &mut dw[i * outputs..(i + 1) * outputs];
                            for (d, &g) in dw_row.iter_mut().zip(dy_row) {
                                *d += xi * g;
                            }
                        }
                    }
                    let db = adj[b.0].data_mut();
                    for (d, &g) in db.iter_mut().zip(dy_row) {
                        *d += g;
                    }
                }
            }
            Op::Relu(a) => {
                let da = adj[a.0].data_mut();
                for ((d, &x), &g) in da.iter_mut().zip(v(a).data()).zip(dy.data()) {
                    if x > 0.0 {
                        *d += g;
                    }
                }
            }
            Op::Softmax(a) => {
                let y = node.value.data();
                let width = node.value.last_dim();
                let da = adj[a.0].data_mut();
                for ((y_row, g_row), d_row) in y
                    .chunks(width)
                    .zip(dy.data().chunks(width))
                    .zip(da.chunks_mut(width))
                {
                    let inner = dot(y_row, g_row);
                    for ((d, &yi), &gi) in d_row.iter_mut().zip(y_row).zip(g_row) {
                        *d += yi * (gi - inner);
                    }
                }
            }
            Op::LogClamped(a) => {
                let da = adj[a.0].data_mut();
                for ((d, &x), &g) in da.iter_mut().zip(v(a).data()).zip(dy.data()) {
                    if x > LOG_FLOOR {
                        *d += g / x;
                    }
                }
            }
            Op::Mul(a, b) => {
                let (av, bv) = (v(a).data().to_vec(), v(b).data().to_vec());
                for ((d, &bi), &g) in adj[a.0].data_mut().iter_mut().zip(&bv).zip(dy.data()) {
                    *d += g * bi;
                }
                for ((d, &ai), &g) in adj[b.0].data_mut().iter_mut().zip(&av).zip(dy.data()) {
                    *d += g * ai;
                }
            }
            Op::Outer(a, b) => {
                let (av, bv) = (v(a).data().to_vec(), v(b).data().to_vec());
                let m = bv.len();
                let g = dy.data();
                for (i, d) in adj[a.0].data_mut().iter_mut().enumerate() {
                    *d += dot(&g[i * m..(i + 1) * m], &bv);
                }
                for (j, d) in adj[b.0].data_mut().iter_mut().enumerate() {
                    *d += av.iter().enumerate().map(|(i, &ai)| ai * g[i * m + j]).sum::<f64>();
                }
            }
            Op::ReduceMax(a) => {
                let channels = node.value.len();
                let da = adj[a.0].data_mut();
                for (c, (&row, &g)) in node.argmax.iter().zip(dy.data()).enumerate() {
                    da[row * channels + c] += g;
                }
            }
            Op::ReduceSum(a) => {
                let g = dy.data()[0];
                adj[a.0].data_mut().iter_mut().for_each(|d| *d += g);
            }
            Op::Scale(a, c) => {
                for (d, &g) in adj[a.0].data_mut().iter_mut().zip(dy.data()) {
                    *d += c * g;
                }
            }
            Op::Add(a, b) => {
                for id in [a, b] {
                    for (d, &g) in adj[id.0].data_mut().iter_mut().zip(dy.data()) {
                        *d += g;
                    }
                }
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn map(t: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    let data = t.data().iter().map(|&x| f(x)).collect();
    Tensor::new(t.shape().to_vec(), data).expect("shape preserved")
}

fn zip(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::new(a.shape().to_vec(), data).expect("shape preserved")
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(op, format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

fn affine_forward(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    let ws = w.shape();
    if ws.len() != 2 {
        return Err(Error::shape("affine", format!("weight must be 2-D, got {ws:?}")));
    }
    let (inputs, outputs) = (ws[0], ws[1]);
    let xs = x.shape();
    let (rows, out_shape) = match xs.len() {
        1 if xs[0] == inputs => (1, vec![outputs]),
        2 if xs[1] == inputs => (xs[0], vec![xs[0], outputs]),
        _ => {
            return Err(Error::shape(
                "affine",
                format!("input {xs:?} incompatible with weight {ws:?}"),
            ))
        }
    };
    if b.shape() != [outputs] {
        return Err(Error::shape(
            "affine",
            format!("bias {:?} incompatible with weight {ws:?}", b.shape()),
        ));
    }
    let (xd, wd, bd) = (x.data(), w.data(), b.data());
    let mut out = Vec::with_capacity(rows * outputs);
    for p in 0..rows {
        let start = out.len();
        out.extend_from_slice(bd);
        let row = &mut out[start..];
        for (i, &xi) in xd[p * inputs..(p + 1) * inputs].iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, &wi) in row.iter_mut().zip(&wd[i * outputs..(i + 1) * outputs]) {
                *o += xi * wi;
            }
        }
    }
    Tensor::new(out_shape, out)
}

fn softmax_forward(z: &Tensor) -> Tensor {
    let width = z.last_dim();
    let mut out = Vec::with_capacity(z.len());
    for row in z.data().chunks(width) {
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let start = out.len();
        out.extend(row.iter().map(|&x| (x - m).exp()));
        let total: f64 = out[start..].iter().sum();
        out[start..].iter_mut().for_each(|e| *e /= total);
    }
    Tensor::new(z.shape().to_vec(), out).expect("shape preserved")
}

fn outer_forward(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.shape().len() != 1 || b.shape().len() != 1 {
        return Err(Error::shape(
            "outer_product",
            format!("operands must be vectors, got {:?} and {:?}", a.shape(), b.shape()),
        ));
    }
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &ai in a.data() {
        out.extend(b.data().iter().map(|&bj| ai * bj));
    }
    Tensor::new(vec![a.len(), b.len()], out)
}

fn reduce_max_forward(x: &Tensor) -> Result<(Tensor, Vec<usize>)> {
    let s = x.shape();
    if s.len() != 2 || s[0] == 0 {
        return Err(Error::shape(
            "reduce_max",
            format!("expected non-empty [points, channels], got {s:?}"),
        ));
    }
    let channels = s[1];
    let d = x.data();
    let mut best = d[..channels].to_vec();
    let mut argmax = vec![0usize; channels];
    for p in 1..s[0] {
        let row = &d[p * channels..(p + 1) * channels];
        for c in 0..channels {
            // Strict comparison keeps the lowest index on ties.
            if row[c] > best[c] {
                best[c] = row[c];
                argmax[c] = p;
            }
        }
    }
    Ok((Tensor::vector(best), argmax))
}
