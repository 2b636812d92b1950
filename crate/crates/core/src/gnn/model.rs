//! The four backbones and their parameter layouts.
//!
//! Every backbone maps node features `n × C₀` to per-node outputs
//! `n × C_out`; `C_out = 2K` carries `K` policy logits followed by `K` value
//! predictions (see [`super::head`]). Parameters live in one flat vector whose
//! layout is fixed by the model kind and dimensions; forward passes read it
//! front to back in layout order.

use super::tape::{Sparse, Tape, Var};
use super::Matrix;
use crate::error::{Error, Result};
use crate::graph::Graph;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    S2v,
    Gcn,
    Gin,
    Ign2p,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::S2v, ModelKind::Gcn, ModelKind::Gin, ModelKind::Ign2p];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::S2v => "s2v",
            ModelKind::Gcn => "gcn",
            ModelKind::Gin => "gin",
            ModelKind::Ign2p => "ign2p",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            ModelKind::S2v => 1,
            ModelKind::Gcn => 2,
            ModelKind::Gin => 3,
            ModelKind::Ign2p => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        ModelKind::ALL.into_iter().find(|k| k.code() == code)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::input(format!("unknown model {s:?} (expected s2v, gcn, gin, ign2p)")))
    }
}

/// Network dimensions. Fields a kind does not use are ignored by it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Embedding width (S2V `p`, GCN/GIN hidden size, 2-IGN+ block width).
    pub hidden: usize,
    /// Propagation steps (S2V), layers (GCN/GIN) or blocks (2-IGN+).
    pub layers: usize,
    /// Linear layers per MLP (GIN, 2-IGN+).
    pub mlp_layers: usize,
    pub mlp_hidden: usize,
}

impl Dims {
    /// Default sizes of each backbone.
    pub fn standard(kind: ModelKind, in_dim: usize, out_dim: usize) -> Self {
        let (hidden, layers, mlp_layers, mlp_hidden) = match kind {
            ModelKind::S2v => (64, 5, 0, 0),
            ModelKind::Gcn => (32, 5, 0, 0),
            ModelKind::Gin => (32, 5, 5, 16),
            ModelKind::Ign2p => (8, 2, 2, 8),
        };
        Dims { in_dim, out_dim, hidden, layers, mlp_layers, mlp_hidden }
    }

    pub fn to_array(self) -> [u32; 6] {
        [self.in_dim, self.out_dim, self.hidden, self.layers, self.mlp_layers, self.mlp_hidden].map(|x| x as u32)
    }

    pub fn from_array(a: [u32; 6]) -> Self {
        let [in_dim, out_dim, hidden, layers, mlp_layers, mlp_hidden] = a.map(|x| x as usize);
        Dims { in_dim, out_dim, hidden, layers, mlp_layers, mlp_hidden }
    }

    pub fn validate(&self, kind: ModelKind) -> Result<()> {
        let needs_mlp = matches!(kind, ModelKind::Gin | ModelKind::Ign2p);
        if self.in_dim == 0 || self.out_dim == 0 || self.hidden == 0 || self.layers == 0 {
            return Err(Error::input(format!("{kind}: all dimensions must be positive: {self:?}")));
        }
        if needs_mlp && (self.mlp_layers == 0 || (self.mlp_layers > 1 && self.mlp_hidden == 0)) {
            return Err(Error::input(format!("{kind}: MLP dimensions must be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

impl TensorSpec {
    fn new(name: impl Into<String>, rows: usize, cols: usize) -> Self {
        TensorSpec { name: name.into(), rows, cols }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_bias(&self) -> bool {
        self.rows == 1 && self.name.ends_with(".b")
    }
}

fn mlp_sizes(input: usize, output: usize, layers: usize, hidden: usize) -> Vec<usize> {
    let mut sizes = vec![input];
    sizes.extend(std::iter::repeat_n(hidden, layers.saturating_sub(1)));
    sizes.push(output);
    sizes
}

fn mlp_specs(out: &mut Vec<TensorSpec>, prefix: &str, sizes: &[usize]) {
    for (i, w) in sizes.windows(2).enumerate() {
        out.push(TensorSpec::new(format!("{prefix}.{i}.w"), w[0], w[1]));
        out.push(TensorSpec::new(format!("{prefix}.{i}.b"), 1, w[1]));
    }
}

/// Ordered parameter tensors of a model.
pub fn layout(kind: ModelKind, d: &Dims) -> Vec<TensorSpec> {
    let mut specs = Vec::new();
    match kind {
        ModelKind::S2v => {
            let p = d.hidden;
            specs.push(TensorSpec::new("theta1", d.in_dim, p));
            specs.push(TensorSpec::new("theta2", p, p));
            specs.push(TensorSpec::new("theta4", p, p));
            specs.push(TensorSpec::new("theta5", p, p));
            specs.push(TensorSpec::new("theta3", 2 * p, d.out_dim));
        }
        ModelKind::Gcn => {
            for l in 0..d.layers {
                let fan_in = if l == 0 { d.in_dim } else { d.hidden };
                specs.push(TensorSpec::new(format!("layer{l}"), fan_in, d.hidden));
            }
            specs.push(TensorSpec::new("head.w", d.hidden, d.out_dim));
            specs.push(TensorSpec::new("head.b", 1, d.out_dim));
        }
        ModelKind::Gin => {
            for l in 0..d.layers {
                let fan_in = if l == 0 { d.in_dim } else { d.hidden };
                mlp_specs(&mut specs, &format!("mlp{l}"), &mlp_sizes(fan_in, d.hidden, d.mlp_layers, d.mlp_hidden));
            }
            let concat = d.in_dim + d.layers * d.hidden;
            mlp_specs(&mut specs, "suffix", &mlp_sizes(concat, d.out_dim, d.mlp_layers, d.mlp_hidden));
        }
        ModelKind::Ign2p => {
            let mut c = d.in_dim + 1;
            for l in 0..d.layers {
                let sizes = mlp_sizes(c, d.hidden, d.mlp_layers, d.mlp_hidden);
                mlp_specs(&mut specs, &format!("block{l}.m1"), &sizes);
                mlp_specs(&mut specs, &format!("block{l}.m2"), &sizes);
                mlp_specs(&mut specs, &format!("block{l}.m3"), &mlp_sizes(c + d.hidden, d.hidden, d.mlp_layers, d.mlp_hidden));
                specs.push(TensorSpec::new(format!("block{l}.h.w"), 5 * d.hidden, d.out_dim));
                specs.push(TensorSpec::new(format!("block{l}.h.b"), 1, d.out_dim));
                c = d.hidden;
            }
        }
    }
    specs
}

pub fn param_count(kind: ModelKind, d: &Dims) -> usize {
    layout(kind, d).iter().map(TensorSpec::len).sum()
}

/// Sequential reader of the flat parameter vector, checked against the layout.
struct Cursor<'a> {
    theta: &'a [f64],
    specs: Vec<TensorSpec>,
    next: usize,
    offset: usize,
}

impl<'a> Cursor<'a> {
    fn new(kind: ModelKind, dims: &Dims, theta: &'a [f64]) -> Self {
        let specs = layout(kind, dims);
        assert_eq!(theta.len(), specs.iter().map(TensorSpec::len).sum::<usize>(), "parameter vector length");
        Cursor { theta, specs, next: 0, offset: 0 }
    }

    fn take(&mut self, tape: &mut Tape, rows: usize, cols: usize) -> Var {
        let spec = &self.specs[self.next];
        assert_eq!((spec.rows, spec.cols), (rows, cols), "layout mismatch at {}", spec.name);
        let v = tape.param(self.theta, self.offset, rows, cols);
        self.offset += rows * cols;
        self.next += 1;
        v
    }

    fn finish(self) {
        assert_eq!(self.next, self.specs.len(), "forward pass left parameters unread");
    }
}

fn mlp(tape: &mut Tape, cur: &mut Cursor, mut x: Var, sizes: &[usize]) -> Var {
    let last = sizes.len() - 2;
    for (i, w) in sizes.windows(2).enumerate() {
        let wv = cur.take(tape, w[0], w[1]);
        let bv = cur.take(tape, 1, w[1]);
        let lin = tape.matmul(x, wv);
        x = tape.add_bias(lin, bv);
        if i < last {
            x = tape.relu(x);
        }
    }
    x
}

/// Sparse propagation operators of one graph.
pub struct GraphOps {
    pub n: usize,
    /// Adjacency `A`.
    pub adj: Arc<Sparse>,
    /// `A + I`.
    pub adj_self: Arc<Sparse>,
    /// `D̃^{-1/2} (A + I) D̃^{-1/2}`.
    pub adj_norm: Arc<Sparse>,
}

impl GraphOps {
    pub fn new(g: &Graph) -> Self {
        let n = g.n();
        let build = |self_loops: bool, normalize: bool| {
            let mut s = Sparse { n, offsets: vec![0], ..Default::default() };
            let scale = |v: usize| 1.0 / ((g.degree(v) + 1) as f64).sqrt();
            for u in 0..n {
                let mut row: Vec<usize> = g.neighbors(u).to_vec();
                if self_loops {
                    row.push(u);
                    row.sort_unstable();
                }
                for v in row {
                    s.cols.push(v);
                    s.weights.push(if normalize { scale(u) * scale(v) } else { 1.0 });
                }
                s.offsets.push(s.cols.len());
            }
            Arc::new(s)
        };
        GraphOps { n, adj: build(false, false), adj_self: build(true, false), adj_norm: build(true, true) }
    }
}

/// Records the forward pass on `tape`; returns the `n × out_dim` output.
pub fn forward(tape: &mut Tape, kind: ModelKind, dims: &Dims, theta: &[f64], features: &Matrix, ops: &GraphOps) -> Var {
    assert_eq!(features.cols, dims.in_dim, "feature width");
    assert_eq!(features.rows, ops.n, "feature rows");
    let mut cur = Cursor::new(kind, dims, theta);
    let n = ops.n;
    let x = tape.constant(features.clone());
    let out = match kind {
        ModelKind::S2v => {
            let p = dims.hidden;
            let t1 = cur.take(tape, dims.in_dim, p);
            let t2 = cur.take(tape, p, p);
            let t4 = cur.take(tape, p, p);
            let t5 = cur.take(tape, p, p);
            let t3 = cur.take(tape, 2 * p, dims.out_dim);
            let base = tape.matmul(x, t1);
            // embeddings start at zero, so the first step is relu(X θ₁)
            let mut h = tape.relu(base);
            for _ in 1..dims.layers {
                let agg = tape.sparse(&ops.adj, h);
                let msg = tape.matmul(agg, t2);
                let pre = tape.add(base, msg);
                h = tape.relu(pre);
            }
            let total = tape.col_sum(h);
            let pooled = tape.broadcast_rows(total, n);
            let global = tape.matmul(pooled, t4);
            let local = tape.matmul(h, t5);
            let cat = tape.concat(&[global, local]);
            let act = tape.relu(cat);
            tape.matmul(act, t3)
        }
        ModelKind::Gcn => {
            let mut h = x;
            for l in 0..dims.layers {
                let fan_in = if l == 0 { dims.in_dim } else { dims.hidden };
                let w = cur.take(tape, fan_in, dims.hidden);
                let agg = tape.sparse(&ops.adj_norm, h);
                let lin = tape.matmul(agg, w);
                h = tape.relu(lin);
            }
            let w = cur.take(tape, dims.hidden, dims.out_dim);
            let b = cur.take(tape, 1, dims.out_dim);
            let lin = tape.matmul(h, w);
            tape.add_bias(lin, b)
        }
        ModelKind::Gin => {
            let mut hs = vec![x];
            let mut h = x;
            for l in 0..dims.layers {
                let fan_in = if l == 0 { dims.in_dim } else { dims.hidden };
                let agg = tape.sparse(&ops.adj_self, h);
                h = mlp(tape, &mut cur, agg, &mlp_sizes(fan_in, dims.hidden, dims.mlp_layers, dims.mlp_hidden));
                hs.push(h);
            }
            let cat = tape.concat(&hs);
            let concat = dims.in_dim + dims.layers * dims.hidden;
            mlp(tape, &mut cur, cat, &mlp_sizes(concat, dims.out_dim, dims.mlp_layers, dims.mlp_hidden))
        }
        ModelKind::Ign2p => {
            let c0 = dims.in_dim + 1;
            let mut x0 = Matrix::zeros(n * n, c0);
            for u in 0..n {
                for k in ops.adj.offsets[u]..ops.adj.offsets[u + 1] {
                    x0[(u * n + ops.adj.cols[k], 0)] = 1.0;
                }
                for ch in 0..dims.in_dim {
                    x0[(u * n + u, 1 + ch)] = features[(u, ch)];
                }
            }
            let mut xt = tape.constant(x0);
            let mut c = c0;
            let mut y: Option<Var> = None;
            for _ in 0..dims.layers {
                let sizes = mlp_sizes(c, dims.hidden, dims.mlp_layers, dims.mlp_hidden);
                let m1 = mlp(tape, &mut cur, xt, &sizes);
                let m2 = mlp(tape, &mut cur, xt, &sizes);
                let w = tape.channel_matmul(m1, m2, n);
                let cat = tape.concat(&[xt, w]);
                xt = mlp(tape, &mut cur, cat, &mlp_sizes(c + dims.hidden, dims.hidden, dims.mlp_layers, dims.mlp_hidden));
                c = dims.hidden;
                let pooled = tape.equiv_pool(xt, n);
                let hw = cur.take(tape, 5 * dims.hidden, dims.out_dim);
                let hb = cur.take(tape, 1, dims.out_dim);
                let lin = tape.matmul(pooled, hw);
                let term = tape.add_bias(lin, hb);
                y = Some(match y {
                    Some(acc) => tape.add(acc, term),
                    None => term,
                });
            }
            y.expect("at least one block")
        }
    };
    cur.finish();
    out
}
