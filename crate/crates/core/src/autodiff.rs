//! Reverse-mode automatic differentiation over dense `f64` tensors.
//!
//! A [`Tape`] records every operation of one forward pass; [`Tape::backward`]
//! walks it in reverse. Only the operations the networks need are provided.

use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "shape {shape:?} does not match {} values",
            data.len()
        );
        Self { shape, data }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn scalar(v: f64) -> Self {
        Self {
            shape: vec![],
            data: vec![v],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn last_dim(&self) -> usize {
        self.shape.last().copied().unwrap_or(1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddBias(Var, Var),
    MatMul(Var, Var),
    LeakyRelu(Var, f64),
    Sigmoid(Var),
    Softplus(Var),
    Sqrt(Var),
    Log(Var),
    Abs(Var),
    Reshape(Var),
    NodeMix {
        x: Var,
        m: Arc<[f64]>,
        nout: usize,
        nin: usize,
    },
    TemporalConv {
        x: Var,
        w: Var,
        b: Var,
    },
    ConvTranspose {
        x: Var,
        w: Var,
        b: Var,
        stride: usize,
    },
    Gather(Var, Arc<[Option<usize>]>),
    Concat(Vec<Var>),
    Sum(Var),
    MeanRows(Var),
    Normalize3 {
        x: Var,
        norms: Vec<f64>,
    },
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Minimum row norm accepted by [`Tape::normalize3`]; shorter rows take the
/// fallback direction.
pub const MIN_NORM: f64 = 1e-12;

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    pub fn take(&mut self, v: Var) -> Option<Vec<f64>> {
        self.grads.get_mut(v.0).and_then(Option::take)
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

    fn push(&mut self, value: Tensor, op: Op, inputs: &[Var]) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad: true,
        });
        Var(self.nodes.len() - 1)
    }

    /// Constant leaf (no gradient).
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].value.shape
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value.data[0]
    }

    /// Copy of `v` cut off from the graph.
    pub fn detach(&mut self, v: Var) -> Var {
        let t = self.nodes[v.0].value.clone();
        self.constant(t)
    }

    fn unary(&mut self, x: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let xv = &self.nodes[x.0].value;
        let value = Tensor::new(xv.shape.clone(), xv.data.iter().map(|&v| f(v)).collect());
        self.push(value, op, &[x])
    }

    fn binary(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, op: Op) -> Var {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(av.shape, bv.shape, "elementwise shape mismatch");
        let data = av.data.iter().zip(&bv.data).map(|(&x, &y)| f(x, y)).collect();
        let value = Tensor::new(av.shape.clone(), data);
        self.push(value, op, &[a, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, |x, y| x * y, Op::Mul(a, b))
    }

    pub fn scale(&mut self, x: Var, k: f64) -> Var {
        self.unary(x, |v| v * k, Op::Scale(x, k))
    }

    pub fn leaky_relu(&mut self, x: Var, slope: f64) -> Var {
        self.unary(x, |v| if v > 0.0 { v } else { slope * v }, Op::LeakyRelu(x, slope))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.unary(x, sigmoid, Op::Sigmoid(x))
    }

    pub fn softplus(&mut self, x: Var) -> Var {
        self.unary(x, softplus, Op::Softplus(x))
    }

    pub fn sqrt(&mut self, x: Var) -> Var {
        self.unary(x, f64::sqrt, Op::Sqrt(x))
    }

    pub fn log(&mut self, x: Var) -> Var {
        self.unary(x, f64::ln, Op::Log(x))
    }

    pub fn abs(&mut self, x: Var) -> Var {
        self.unary(x, f64::abs, Op::Abs(x))
    }

    pub fn reshape(&mut self, x: Var, shape: Vec<usize>) -> Var {
        let data = self.nodes[x.0].value.data.clone();
        self.push(Tensor::new(shape, data), Op::Reshape(x), &[x])
    }

    /// `x[..., C] + b[C]`.
    pub fn add_bias(&mut self, x: Var, b: Var) -> Var {
        let (xv, bv) = (&self.nodes[x.0].value, &self.nodes[b.0].value);
        let c = bv.len();
        assert_eq!(xv.last_dim(), c, "bias width mismatch");
        let mut data = xv.data.clone();
        for row in data.chunks_exact_mut(c) {
            for (o, &bb) in row.iter_mut().zip(&bv.data) {
                *o += bb;
            }
        }
        let value = Tensor::new(xv.shape.clone(), data);
        self.push(value, Op::AddBias(x, b), &[x, b])
    }

    /// `x[..., K] · w[K, N]` with all leading axes of `x` treated as rows.
    pub fn matmul(&mut self, x: Var, w: Var) -> Var {
        let (xv, wv) = (&self.nodes[x.0].value, &self.nodes[w.0].value);
        assert_eq!(wv.shape.len(), 2, "weight must be 2-D");
        let (k, n) = (wv.shape[0], wv.shape[1]);
        assert_eq!(xv.last_dim(), k, "matmul inner dimension mismatch");
        let rows = xv.len() / k.max(1);
        let mut out = vec![0.0; rows * n];
        for r in 0..rows {
            let xr = &xv.data[r * k..(r + 1) * k];
            let orow = &mut out[r * n..(r + 1) * n];
            for (i, &a) in xr.iter().enumerate() {
                if a != 0.0 {
                    axpy(orow, a, &wv.data[i * n..(i + 1) * n]);
                }
            }
        }
        let mut shape = xv.shape.clone();
        *shape.last_mut().expect("non-scalar") = n;
        self.push(Tensor::new(shape, out), Op::MatMul(x, w), &[x, w])
    }

    /// Per frame, mix nodes with a constant matrix: `out[t] = M · x[t]`
    /// for `x: [T, nin, C]`, `M: [nout, nin]`.
    pub fn node_mix(&mut self, x: Var, m: Arc<[f64]>, nout: usize) -> Var {
        let xv = &self.nodes[x.0].value;
        assert_eq!(xv.shape.len(), 3, "node_mix expects [T, N, C]");
        let (t, nin, c) = (xv.shape[0], xv.shape[1], xv.shape[2]);
        assert_eq!(m.len(), nout * nin, "mixing matrix shape");
        let mut out = vec![0.0; t * nout * c];
        for f in 0..t {
            let xf = &xv.data[f * nin * c..(f + 1) * nin * c];
            let of = &mut out[f * nout * c..(f + 1) * nout * c];
            for i in 0..nout {
                let orow = &mut of[i * c..(i + 1) * c];
                for j in 0..nin {
                    let a = m[i * nin + j];
                    if a != 0.0 {
                        axpy(orow, a, &xf[j * c..(j + 1) * c]);
                    }
                }
            }
        }
        let value = Tensor::new(vec![t, nout, c], out);
        self.push(value, Op::NodeMix { x, m, nout, nin }, &[x])
    }

    /// Same-length temporal convolution with edge-replicate padding.
    /// `x: [T, R, Cin]`, `w: [K, Cin, Cout]` (K odd), `b: [Cout]` → `[T, R, Cout]`.
    pub fn temporal_conv(&mut self, x: Var, w: Var, b: Var) -> Var {
        let (xv, wv, bv) = (&self.nodes[x.0].value, &self.nodes[w.0].value, &self.nodes[b.0].value);
        assert_eq!(xv.shape.len(), 3, "temporal_conv expects [T, R, C]");
        let (t, r, cin) = (xv.shape[0], xv.shape[1], xv.shape[2]);
        let (k, wcin, cout) = (wv.shape[0], wv.shape[1], wv.shape[2]);
        assert_eq!(wcin, cin, "conv input channels");
        assert_eq!(k % 2, 1, "conv kernel must be odd");
        assert_eq!(bv.len(), cout, "conv bias");
        let pad = k / 2;
        let mut out = vec![0.0; t * r * cout];
        for f in 0..t {
            for row in 0..r {
                out[(f * r + row) * cout..(f * r + row + 1) * cout].copy_from_slice(&bv.data);
            }
            for kk in 0..k {
                let src = clamp_frame(f + kk, pad, t);
                let wk = &wv.data[kk * cin * cout..(kk + 1) * cin * cout];
                for row in 0..r {
                    let xr = &xv.data[(src * r + row) * cin..(src * r + row + 1) * cin];
                    let orow = &mut out[(f * r + row) * cout..(f * r + row + 1) * cout];
                    for (ci, &a) in xr.iter().enumerate() {
                        if a != 0.0 {
                            axpy(orow, a, &wk[ci * cout..(ci + 1) * cout]);
                        }
                    }
                }
            }
        }
        let value = Tensor::new(vec![t, r, cout], out);
        self.push(value, Op::TemporalConv { x, w, b }, &[x, w, b])
    }

    /// Transposed temporal convolution. `x: [Tin, Cin]`, `w: [K, Cin, Cout]`
    /// → `[(Tin − 1)·stride + K, Cout]`.
    pub fn conv_transpose(&mut self, x: Var, w: Var, b: Var, stride: usize) -> Var {
        let (xv, wv, bv) = (&self.nodes[x.0].value, &self.nodes[w.0].value, &self.nodes[b.0].value);
        assert_eq!(xv.shape.len(), 2, "conv_transpose expects [T, C]");
        let (tin, cin) = (xv.shape[0], xv.shape[1]);
        let (k, wcin, cout) = (wv.shape[0], wv.shape[1], wv.shape[2]);
        assert_eq!(wcin, cin, "conv_transpose input channels");
        let tout = (tin - 1) * stride + k;
        let mut out = Vec::with_capacity(tout * cout);
        for _ in 0..tout {
            out.extend_from_slice(&bv.data);
        }
        for s in 0..tin {
            let xr = &xv.data[s * cin..(s + 1) * cin];
            for kk in 0..k {
                let o = s * stride + kk;
                let wk = &wv.data[kk * cin * cout..(kk + 1) * cin * cout];
                let orow = &mut out[o * cout..(o + 1) * cout];
                for (ci, &a) in xr.iter().enumerate() {
                    if a != 0.0 {
                        axpy(orow, a, &wk[ci * cout..(ci + 1) * cout]);
                    }
                }
            }
        }
        let value = Tensor::new(vec![tout, cout], out);
        self.push(value, Op::ConvTranspose { x, w, b, stride }, &[x, w, b])
    }

    /// `out[i] = x[idx[i]]`, zero where `idx[i]` is `None`.
    pub fn gather(&mut self, x: Var, idx: Arc<[Option<usize>]>, shape: Vec<usize>) -> Var {
        let xv = &self.nodes[x.0].value;
        let data = idx.iter().map(|i| i.map_or(0.0, |i| xv.data[i])).collect();
        self.push(Tensor::new(shape, data), Op::Gather(x, idx), &[x])
    }

    /// Concatenate along the last axis; leading axes must agree.
    pub fn concat(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let lead = {
            let s = &self.nodes[parts[0].0].value.shape;
            s[..s.len() - 1].to_vec()
        };
        let rows: usize = lead.iter().product();
        let widths: Vec<usize> = parts
            .iter()
            .map(|p| {
                let s = &self.nodes[p.0].value.shape;
                assert_eq!(&s[..s.len() - 1], &lead[..], "concat leading axes");
                *s.last().expect("non-scalar")
            })
            .collect();
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for (p, &w) in parts.iter().zip(&widths) {
                data.extend_from_slice(&self.nodes[p.0].value.data[r * w..(r + 1) * w]);
            }
        }
        let mut shape = lead;
        shape.push(total);
        self.push(Tensor::new(shape, data), Op::Concat(parts.to_vec()), parts)
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.nodes[x.0].value.data.iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(x), &[x])
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let n = self.nodes[x.0].value.len() as f64;
        let s = self.sum(x);
        self.scale(s, 1.0 / n)
    }

    /// Average over every leading axis: `[..., C] → [C]`.
    pub fn mean_rows(&mut self, x: Var) -> Var {
        let xv = &self.nodes[x.0].value;
        let c = xv.last_dim();
        let rows = xv.len() / c;
        let mut out = vec![0.0; c];
        for r in xv.data.chunks_exact(c) {
            for (o, v) in out.iter_mut().zip(r) {
                *o += v;
            }
        }
        for o in &mut out {
            *o /= rows as f64;
        }
        self.push(Tensor::new(vec![c], out), Op::MeanRows(x), &[x])
    }

    /// Normalize every consecutive 3-vector. Rows with norm below
    /// [`MIN_NORM`] take the matching row of `fallback` (no gradient).
    pub fn normalize3(&mut self, x: Var, fallback: &[f64]) -> (Var, Vec<usize>) {
        let xv = &self.nodes[x.0].value;
        assert_eq!(xv.len() % 3, 0);
        assert_eq!(fallback.len(), xv.len());
        let mut data = xv.data.clone();
        let mut norms = Vec::with_capacity(xv.len() / 3);
        let mut replaced = Vec::new();
        for (i, (row, fb)) in data.chunks_exact_mut(3).zip(fallback.chunks_exact(3)).enumerate() {
            let n = (row[0] * row[0] + row[1] * row[1] + row[2] * row[2]).sqrt();
            if n < MIN_NORM {
                let fnorm = (fb[0] * fb[0] + fb[1] * fb[1] + fb[2] * fb[2]).sqrt().max(MIN_NORM);
                for (o, f) in row.iter_mut().zip(fb) {
                    *o = f / fnorm;
                }
                norms.push(0.0);
                replaced.push(i);
            } else {
                for o in row.iter_mut() {
                    *o /= n;
                }
                norms.push(n);
            }
        }
        let value = Tensor::new(xv.shape.clone(), data);
        (self.push(value, Op::Normalize3 { x, norms }, &[x]), replaced)
    }

    /// Hash of the sign pattern at every non-smooth point (leaky rectifier
    /// and absolute-value inputs). Equal signatures mean two passes lie in
    /// the same smooth piece of the function.
    pub fn kink_signature(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for node in &self.nodes {
            let x = match node.op {
                Op::LeakyRelu(x, _) | Op::Abs(x) => x,
                _ => continue,
            };
            for v in &self.nodes[x.0].value.data {
                let bit = if *v > 0.0 {
                    1
                } else if *v < 0.0 {
                    2
                } else {
                    3
                };
                h = (h ^ bit).wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }

    /// Gradients of the scalar `loss` with respect to every node that
    /// depends on a trainable leaf.
    pub fn backward(&self, loss: Var) -> Gradients {
        assert_eq!(self.nodes[loss.0].value.len(), 1, "loss must be scalar");
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.backprop_node(node, &g, &mut grads);
            grads[i] = Some(g);
        }
        Gradients { grads }
    }

    fn backprop_node(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let val = |v: Var| &self.nodes[v.0].value;
        let needs = |v: Var| self.nodes[v.0].requires_grad;
        macro_rules! acc {
            ($v:expr) => {{
                let v: Var = $v;
                let n = self.nodes[v.0].value.len();
                grads[v.0].get_or_insert_with(|| vec![0.0; n])
            }};
        }
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                for v in [*a, *b] {
                    if needs(v) {
                        add_into(acc!(v), g);
                    }
                }
            }
            Op::Sub(a, b) => {
                if needs(*a) {
                    add_into(acc!(*a), g);
                }
                if needs(*b) {
                    axpy(acc!(*b), -1.0, g);
                }
            }
            Op::Mul(a, b) => {
                if needs(*a) {
                    let bv = &val(*b).data;
                    for ((o, gi), bi) in acc!(*a).iter_mut().zip(g).zip(bv) {
                        *o += gi * bi;
                    }
                }
                if needs(*b) {
                    let av = &val(*a).data;
                    for ((o, gi), ai) in acc!(*b).iter_mut().zip(g).zip(av) {
                        *o += gi * ai;
                    }
                }
            }
            Op::Scale(x, k) => axpy(acc!(*x), *k, g),
            Op::Reshape(x) => add_into(acc!(*x), g),
            Op::AddBias(x, b) => {
                if needs(*x) {
                    add_into(acc!(*x), g);
                }
                if needs(*b) {
                    let c = val(*b).len();
                    let gb = acc!(*b);
                    for row in g.chunks_exact(c) {
                        add_into(gb, row);
                    }
                }
            }
            Op::MatMul(x, w) => {
                let (xv, wv) = (val(*x), val(*w));
                let (k, n) = (wv.shape[0], wv.shape[1]);
                let rows = xv.len() / k.max(1);
                if needs(*x) {
                    let wd = &wv.data;
                    let gx = acc!(*x);
                    for r in 0..rows {
                        let gr = &g[r * n..(r + 1) * n];
                        for i in 0..k {
                            gx[r * k + i] += dot(gr, &wd[i * n..(i + 1) * n]);
                        }
                    }
                }
                if needs(*w) {
                    let xd = &xv.data;
                    let gw = acc!(*w);
                    for r in 0..rows {
                        let gr = &g[r * n..(r + 1) * n];
                        for i in 0..k {
                            let a = xd[r * k + i];
                            if a != 0.0 {
                                axpy(&mut gw[i * n..(i + 1) * n], a, gr);
                            }
                        }
                    }
                }
            }
            Op::LeakyRelu(x, slope) => {
                let xd = &val(*x).data;
                for ((o, gi), xi) in acc!(*x).iter_mut().zip(g).zip(xd) {
                    *o += if *xi > 0.0 { *gi } else { slope * gi };
                }
            }
            Op::Sigmoid(x) => {
                let yd = &node.value.data;
                for ((o, gi), y) in acc!(*x).iter_mut().zip(g).zip(yd) {
                    *o += gi * y * (1.0 - y);
                }
            }
            Op::Softplus(x) => {
                let xd = &val(*x).data;
                for ((o, gi), xi) in acc!(*x).iter_mut().zip(g).zip(xd) {
                    *o += gi * sigmoid(*xi);
                }
            }
            Op::Sqrt(x) => {
                let yd = &node.value.data;
                for ((o, gi), y) in acc!(*x).iter_mut().zip(g).zip(yd) {
                    *o += gi * 0.5 / y;
                }
            }
            Op::Log(x) => {
                let xd = &val(*x).data;
                for ((o, gi), xi) in acc!(*x).iter_mut().zip(g).zip(xd) {
                    *o += gi / xi;
                }
            }
            Op::Abs(x) => {
                let xd = &val(*x).data;
                for ((o, gi), xi) in acc!(*x).iter_mut().zip(g).zip(xd) {
                    *o += gi * sign(*xi);
                }
            }
            Op::NodeMix { x, m, nout, nin } => {
                let s = &val(*x).shape;
                let (t, c) = (s[0], s[2]);
                let gx = acc!(*x);
                for f in 0..t {
                    for i in 0..*nout {
                        let gr = &g[(f * nout + i) * c..(f * nout + i + 1) * c];
                        for j in 0..*nin {
                            let a = m[i * nin + j];
                            if a != 0.0 {
                                axpy(&mut gx[(f * nin + j) * c..(f * nin + j + 1) * c], a, gr);
                            }
                        }
                    }
                }
            }
            Op::TemporalConv { x, w, b } => {
                let (xv, wv) = (val(*x), val(*w));
                let (t, r, cin) = (xv.shape[0], xv.shape[1], xv.shape[2]);
                let (k, cout) = (wv.shape[0], wv.shape[2]);
                let pad = k / 2;
                if needs(*b) {
                    let gb = acc!(*b);
                    for row in g.chunks_exact(cout) {
                        add_into(gb, row);
                    }
                }
                if needs(*x) {
                    let wd = &wv.data;
                    let gx = acc!(*x);
                    for f in 0..t {
                        for kk in 0..k {
                            let src = clamp_frame(f + kk, pad, t);
                            let wk = &wd[kk * cin * cout..(kk + 1) * cin * cout];
                            for row in 0..r {
                                let gr = &g[(f * r + row) * cout..(f * r + row + 1) * cout];
                                let gxr = &mut gx[(src * r + row) * cin..(src * r + row + 1) * cin];
                                for (ci, o) in gxr.iter_mut().enumerate() {
                                    *o += dot(gr, &wk[ci * cout..(ci + 1) * cout]);
                                }
                            }
                        }
                    }
                }
                if needs(*w) {
                    let xd = &xv.data;
                    let gw = acc!(*w);
                    for f in 0..t {
                        for kk in 0..k {
                            let src = clamp_frame(f + kk, pad, t);
                            let gwk = &mut gw[kk * cin * cout..(kk + 1) * cin * cout];
                            for row in 0..r {
                                let gr = &g[(f * r + row) * cout..(f * r + row + 1) * cout];
                                let xr = &xd[(src * r + row) * cin..(src * r + row + 1) * cin];
                                for (ci, &a) in xr.iter().enumerate() {
                                    if a != 0.0 {
                                        axpy(&mut gwk[ci * cout..(ci + 1) * cout], a, gr);
                                    }
                                }
                            }
                        }
                    }
                }
            }
            Op::ConvTranspose { x, w, b, stride } => {
                let (xv, wv) = (val(*x), val(*w));
                let (tin, cin) = (xv.shape[0], xv.shape[1]);
                let (k, cout) = (wv.shape[0], wv.shape[2]);
                if needs(*b) {
                    let gb = acc!(*b);
                    for row in g.chunks_exact(cout) {
                        add_into(gb, row);
                    }
                }
                if needs(*x) {
                    let wd = &wv.data;
                    let gx = acc!(*x);
                    for s in 0..tin {
                        for kk in 0..k {
                            let o = s * stride + kk;
                            let gr = &g[o * cout..(o + 1) * cout];
                            let wk = &wd[kk * cin * cout..(kk + 1) * cin * cout];
                            for ci in 0..cin {
                                gx[s * cin + ci] += dot(gr, &wk[ci * cout..(ci + 1) * cout]);
                            }
                        }
                    }
                }
                if needs(*w) {
                    let xd = &xv.data;
                    let gw = acc!(*w);
                    for s in 0..tin {
                        for kk in 0..k {
                            let o = s * stride + kk;
                            let gr = &g[o * cout..(o + 1) * cout];
                            for ci in 0..cin {
                                let a = xd[s * cin + ci];
                                if a != 0.0 {
                                    let off = (kk * cin + ci) * cout;
                                    axpy(&mut gw[off..off + cout], a, gr);
                                }
                            }
                        }
                    }
                }
            }
            Op::Gather(x, idx) => {
                let gx = acc!(*x);
                for (gi, i) in g.iter().zip(idx.iter()) {
                    if let Some(i) = i {
                        gx[*i] += gi;
                    }
                }
            }
            Op::Concat(parts) => {
                let widths: Vec<usize> = parts.iter().map(|p| val(*p).last_dim()).collect();
                let total: usize = widths.iter().sum();
                let rows = g.len() / total;
                let mut off = 0;
                for (p, &w) in parts.iter().zip(&widths) {
                    if needs(*p) {
                        let gp = acc!(*p);
                        for r in 0..rows {
                            add_into(&mut gp[r * w..(r + 1) * w], &g[r * total + off..r * total + off + w]);
                        }
                    }
                    off += w;
                }
            }
            Op::Sum(x) => {
                let gx = acc!(*x);
                for o in gx.iter_mut() {
                    *o += g[0];
                }
            }
            Op::MeanRows(x) => {
                let xv = val(*x);
                let c = xv.last_dim();
                let rows = (xv.len() / c) as f64;
                let gx = acc!(*x);
                for row in gx.chunks_exact_mut(c) {
                    axpy(row, 1.0 / rows, g);
                }
            }
            Op::Normalize3 { x, norms } => {
                let y = &node.value.data;
                let gx = acc!(*x);
                for (i, &n) in norms.iter().enumerate() {
                    if n == 0.0 {
                        continue;
                    }
                    let yr = &y[i * 3..i * 3 + 3];
                    let gr = &g[i * 3..i * 3 + 3];
                    let d = dot(yr, gr);
                    for k in 0..3 {
                        gx[i * 3 + k] += (gr[k] - yr[k] * d) / n;
                    }
                }
            }
        }
    }
}

#[inline]
fn clamp_frame(shifted: usize, pad: usize, t: usize) -> usize {
    shifted.saturating_sub(pad).min(t - 1)
}

#[inline]
pub(crate) fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
fn add_into(y: &mut [f64], x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += xi;
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[inline]
pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn softplus(v: f64) -> f64 {
    if v > 30.0 {
        v
    } else {
        v.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_tensor(rng: &mut ChaCha8Rng, shape: Vec<usize>) -> Tensor {
        let n = shape.iter().product();
        Tensor::new(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    /// Central-difference check of d(sum(out ⊙ probe))/d(inputs).
    fn check(inputs: Vec<Tensor>, f: impl Fn(&mut Tape, &[Var]) -> Var) {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let eval = |vals: &[Tensor], probe: Option<&Tensor>| -> (f64, Option<Vec<Vec<f64>>>, Tensor) {
            let mut tape = Tape::new();
            let vars: Vec<Var> = vals.iter().map(|t| tape.param(t.clone())).collect();
            let out = f(&mut tape, &vars);
            let ov = tape.value(out).clone();
            let Some(p) = probe else { return (0.0, None, ov) };
            let pv = tape.constant(p.clone());
            let prod = tape.mul(out, pv);
            let loss = tape.sum(prod);
            let g = tape.backward(loss);
            let grads = vars
                .iter()
                .map(|v| {
                    g.get(*v)
                        .map(<[f64]>::to_vec)
                        .unwrap_or_else(|| vec![0.0; tape.value(*v).len()])
                })
                .collect();
            (tape.scalar(loss), Some(grads), ov)
        };
        let (_, _, out) = eval(&inputs, None);
        let probe = rand_tensor(&mut rng, out.shape.clone());
        let (_, grads, _) = eval(&inputs, Some(&probe));
        let grads = grads.unwrap();
        let eps = 1e-5;
        for (ii, t) in inputs.iter().enumerate() {
            for j in 0..t.len() {
                let mut plus = inputs.clone();
                plus[ii].data[j] += eps;
                let mut minus = inputs.clone();
                minus[ii].data[j] -= eps;
                let fd = (eval(&plus, Some(&probe)).0 - eval(&minus, Some(&probe)).0) / (2.0 * eps);
                let bp = grads[ii][j];
                let rel = (fd - bp).abs() / fd.abs().max(bp.abs()).max(1e-6);
                assert!(rel < 1e-6, "input {ii}[{j}]: fd {fd} vs bp {bp}");
            }
        }
    }

    #[test]
    fn grad_elementwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = rand_tensor(&mut rng, vec![2, 3]);
        let b = rand_tensor(&mut rng, vec![2, 3]);
        check(vec![a.clone(), b.clone()], |t, v| {
            let s = t.add(v[0], v[1]);
            let d = t.sub(s, v[1]);
            let m = t.mul(d, v[1]);
            let l = t.leaky_relu(m, 0.2);
            let sg = t.sigmoid(l);
            let sp = t.softplus(sg);
            let ab = t.abs(v[0]);
            let q = t.add(sp, ab);
            t.scale(q, 1.7)
        });
        let pos = Tensor::new(vec![4], vec![0.5, 1.2, 2.0, 3.1]);
        check(vec![pos], |t, v| {
            let s = t.sqrt(v[0]);
            let l = t.log(v[0]);
            t.add(s, l)
        });
    }

    #[test]
    fn grad_matmul_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = rand_tensor(&mut rng, vec![3, 2, 4]);
        let w = rand_tensor(&mut rng, vec![4, 5]);
        let b = rand_tensor(&mut rng, vec![5]);
        check(vec![x, w, b], |t, v| {
            let y = t.matmul(v[0], v[1]);
            t.add_bias(y, v[2])
        });
    }

    #[test]
    fn grad_node_mix() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = rand_tensor(&mut rng, vec![2, 3, 4]);
        let m: Arc<[f64]> = (0..6).map(|i| i as f64 * 0.3 - 0.5).collect::<Vec<_>>().into();
        check(vec![x], move |t, v| t.node_mix(v[0], m.clone(), 2));
    }

    #[test]
    fn grad_temporal_conv() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = rand_tensor(&mut rng, vec![6, 2, 3]);
        let w = rand_tensor(&mut rng, vec![5, 3, 4]);
        let b = rand_tensor(&mut rng, vec![4]);
        check(vec![x, w, b], |t, v| t.temporal_conv(v[0], v[1], v[2]));
    }

    #[test]
    fn grad_conv_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = rand_tensor(&mut rng, vec![4, 3]);
        let w = rand_tensor(&mut rng, vec![10, 3, 2]);
        let b = rand_tensor(&mut rng, vec![2]);
        check(vec![x, w, b], |t, v| {
            let y = t.conv_transpose(v[0], v[1], v[2], 8);
            assert_eq!(t.shape(y), &[34, 2]);
            y
        });
    }

    #[test]
    fn grad_structural() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = rand_tensor(&mut rng, vec![3, 2]);
        let b = rand_tensor(&mut rng, vec![3, 4]);
        check(vec![a, b], |t, v| {
            let c = t.concat(&[v[0], v[1]]);
            let idx: Arc<[Option<usize>]> = vec![Some(5), None, Some(0), Some(5), Some(17)].into();
            let g = t.gather(c, idx, vec![5]);
            let r = t.reshape(v[1], vec![2, 6]);
            let m = t.mean_rows(r);
            let s1 = t.sum(m);
            let gg = t.gather(g, vec![Some(0), Some(1), Some(2)].into(), vec![3]);
            let s = t.reshape(s1, vec![1]);
            let idx3: Arc<[Option<usize>]> = vec![Some(0); 3].into();
            let s3 = t.gather(s, idx3, vec![3]);
            t.add(gg, s3)
        });
    }

    #[test]
    fn grad_normalize() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = rand_tensor(&mut rng, vec![4, 3]);
        check(vec![x], |t, v| t.normalize3(v[0], &[1.0; 12]).0);
    }

    #[test]
    fn normalize_fallback() {
        let mut t = Tape::new();
        let x = t.param(Tensor::new(vec![2, 3], vec![0.0, 0.0, 0.0, 0.0, 3.0, 4.0]));
        let (y, replaced) = t.normalize3(x, &[0.0, 2.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(replaced, vec![0]);
        assert_eq!(t.value(y).data, vec![0.0, 1.0, 0.0, 0.0, 0.6, 0.8]);
    }

    #[test]
    fn replicate_padding_keeps_constants() {
        let mut t = Tape::new();
        let x = t.constant(Tensor::new(vec![5, 1, 1], vec![2.0; 5]));
        let w = t.constant(Tensor::new(vec![3, 1, 1], vec![0.5, -1.0, 2.0]));
        let b = t.constant(Tensor::new(vec![1], vec![0.25]));
        let y = t.temporal_conv(x, w, b);
        assert!(t.value(y).data.iter().all(|&v| v == 2.0 * 1.5 + 0.25));
    }

    #[test]
    fn constants_get_no_gradient() {
        let mut t = Tape::new();
        let c = t.constant(Tensor::new(vec![2], vec![1.0, 2.0]));
        let p = t.param(Tensor::new(vec![2], vec![3.0, 4.0]));
        let d = t.detach(p);
        let m = t.mul(c, p);
        let m2 = t.mul(m, d);
        let s = t.sum(m2);
        let g = t.backward(s);
        assert!(g.get(c).is_none());
        assert!(g.get(d).is_none());
        assert_eq!(g.get(p).unwrap(), &[3.0, 8.0]);
    }
}
