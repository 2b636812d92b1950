//! Minimal reverse-mode differentiation over dense matrices.
//!
//! Values are computed eagerly as operations are recorded; `backward` walks
//! the tape in reverse and accumulates parameter gradients into a flat
//! vector laid out like the parameter vector the forward pass read from.

use super::Matrix;
use std::sync::Arc;

/// Handle to a recorded value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

/// Constant sparse operator `y = S x` (row-compressed).
#[derive(Clone, Debug, Default)]
pub struct Sparse {
    pub n: usize,
    pub offsets: Vec<usize>,
    pub cols: Vec<usize>,
    pub weights: Vec<f64>,
}

impl Sparse {
    pub fn apply(&self, x: &Matrix) -> Matrix {
        assert_eq!(x.rows, self.n);
        let mut out = Matrix::zeros(self.n, x.cols);
        for i in 0..self.n {
            for k in self.offsets[i]..self.offsets[i + 1] {
                let (j, w) = (self.cols[k], self.weights[k]);
                for (o, &v) in out.row_mut(i).iter_mut().zip(x.row(j)) {
                    *o += w * v;
                }
            }
        }
        out
    }

    /// `Sᵀ g`.
    pub fn apply_transpose(&self, g: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.n, g.cols);
        for i in 0..self.n {
            for k in self.offsets[i]..self.offsets[i + 1] {
                let (j, w) = (self.cols[k], self.weights[k]);
                for (o, &v) in out.row_mut(j).iter_mut().zip(g.row(i)) {
                    *o += w * v;
                }
            }
        }
        out
    }
}

enum Op {
    Constant,
    Param { offset: usize },
    MatMul(Var, Var),
    Add(Var, Var),
    AddBias(Var, Var),
    Relu(Var),
    Sparse(Var, Arc<Sparse>),
    ColSum(Var),
    BroadcastRows(Var),
    Concat(Vec<Var>),
    /// Per-channel product of `n × n` slices stored as `(n², C)` matrices.
    ChannelMatMul(Var, Var, usize),
    /// Permutation-equivariant pooling of an `(n², C)` tensor to `n × 5C`.
    EquivPool(Var, usize),
}

struct Node {
    value: Matrix,
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn constant(&mut self, m: Matrix) -> Var {
        self.push(m, Op::Constant)
    }

    /// Parameter block `theta[offset .. offset + rows*cols]`, row-major.
    pub fn param(&mut self, theta: &[f64], offset: usize, rows: usize, cols: usize) -> Var {
        let m = Matrix::from_vec(rows, cols, theta[offset..offset + rows * cols].to_vec());
        self.push(m, Op::Param { offset })
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let mut v = self.value(a).clone();
        v.add_assign(self.value(b));
        self.push(v, Op::Add(a, b))
    }

    /// Adds a `1 × c` row to every row of `a`.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Var {
        let b = self.value(bias);
        assert_eq!((b.rows, b.cols), (1, self.value(a).cols));
        let mut v = self.value(a).clone();
        for r in 0..v.rows {
            for (x, &y) in v.row_mut(r).iter_mut().zip(&b.data) {
                *x += y;
            }
        }
        self.push(v, Op::AddBias(a, bias))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let mut v = self.value(a).clone();
        v.data.iter_mut().for_each(|x| *x = x.max(0.0));
        self.push(v, Op::Relu(a))
    }

    pub fn sparse(&mut self, s: &Arc<Sparse>, a: Var) -> Var {
        let v = s.apply(self.value(a));
        self.push(v, Op::Sparse(a, s.clone()))
    }

    /// Column sums as a `1 × c` row.
    pub fn col_sum(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let mut v = Matrix::zeros(1, x.cols);
        for r in 0..x.rows {
            for (o, &y) in v.data.iter_mut().zip(x.row(r)) {
                *o += y;
            }
        }
        self.push(v, Op::ColSum(a))
    }

    /// Repeats a `1 × c` row `rows` times.
    pub fn broadcast_rows(&mut self, a: Var, rows: usize) -> Var {
        let x = self.value(a);
        assert_eq!(x.rows, 1);
        let data = (0..rows).flat_map(|_| x.data.iter().copied()).collect();
        let v = Matrix::from_vec(rows, x.cols, data);
        self.push(v, Op::BroadcastRows(a))
    }

    /// Column-wise concatenation.
    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let rows = self.value(parts[0]).rows;
        let cols: usize = parts.iter().map(|&p| self.value(p).cols).sum();
        let mut v = Matrix::zeros(rows, cols);
        for r in 0..rows {
            let mut c0 = 0;
            for &p in parts {
                let x = self.value(p);
                assert_eq!(x.rows, rows, "concat row mismatch");
                v.row_mut(r)[c0..c0 + x.cols].copy_from_slice(x.row(r));
                c0 += x.cols;
            }
        }
        self.push(v, Op::Concat(parts.to_vec()))
    }

    pub fn channel_matmul(&mut self, a: Var, b: Var, n: usize) -> Var {
        let (x, y) = (self.value(a), self.value(b));
        assert_eq!((x.rows, x.cols), (y.rows, y.cols));
        assert_eq!(x.rows, n * n);
        let c = x.cols;
        let mut v = Matrix::zeros(n * n, c);
        for i in 0..n {
            for j in 0..n {
                let xr = x.row(i * n + j);
                for k in 0..n {
                    let yr = y.row(j * n + k);
                    let o = v.row_mut(i * n + k);
                    for ch in 0..c {
                        o[ch] += xr[ch] * yr[ch];
                    }
                }
            }
        }
        self.push(v, Op::ChannelMatMul(a, b, n))
    }

    /// For each channel: diagonal, row mean, column mean, mean of the
    /// diagonal and mean of all entries, giving `n × 5C`.
    pub fn equiv_pool(&mut self, a: Var, n: usize) -> Var {
        let x = self.value(a);
        assert_eq!(x.rows, n * n);
        let c = x.cols;
        let inv = if n == 0 { 0.0 } else { 1.0 / n as f64 };
        let mut diag_mean = vec![0.0; c];
        let mut total_mean = vec![0.0; c];
        let mut v = Matrix::zeros(n, 5 * c);
        for i in 0..n {
            for j in 0..n {
                let xr = x.row(i * n + j);
                for ch in 0..c {
                    v[(i, c + ch)] += xr[ch] * inv;
                    v[(j, 2 * c + ch)] += xr[ch] * inv;
                    total_mean[ch] += xr[ch] * inv * inv;
                }
            }
            let d = x.row(i * n + i);
            for ch in 0..c {
                v[(i, ch)] = d[ch];
                diag_mean[ch] += d[ch] * inv;
            }
        }
        for i in 0..n {
            for ch in 0..c {
                v[(i, 3 * c + ch)] = diag_mean[ch];
                v[(i, 4 * c + ch)] = total_mean[ch];
            }
        }
        self.push(v, Op::EquivPool(a, n))
    }

    /// Back-propagates `seed = ∂L/∂out` and returns `∂L/∂theta`.
    pub fn backward(&self, out: Var, seed: Matrix, theta_len: usize) -> Vec<f64> {
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[out.0] = Some(seed);
        let mut dtheta = vec![0.0; theta_len];

        fn acc(grads: &mut [Option<Matrix>], v: Var, g: Matrix) {
            match &mut grads[v.0] {
                Some(existing) => existing.add_assign(&g),
                slot @ None => *slot = Some(g),
            }
        }

        for idx in (0..=out.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            match &self.nodes[idx].op {
                Op::Constant => {}
                Op::Param { offset } => {
                    for (t, x) in dtheta[*offset..*offset + g.data.len()].iter_mut().zip(&g.data) {
                        *t += x;
                    }
                }
                Op::MatMul(a, b) => {
                    let ga = g.matmul_t(self.value(*b));
                    let gb = self.value(*a).t_matmul(&g);
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *a, g.clone());
                    acc(&mut grads, *b, g);
                }
                Op::AddBias(a, bias) => {
                    let mut gb = Matrix::zeros(1, g.cols);
                    for r in 0..g.rows {
                        for (o, &x) in gb.data.iter_mut().zip(g.row(r)) {
                            *o += x;
                        }
                    }
                    acc(&mut grads, *a, g);
                    acc(&mut grads, *bias, gb);
                }
                Op::Relu(a) => {
                    let mut ga = g;
                    for (x, &y) in ga.data.iter_mut().zip(&self.nodes[idx].value.data) {
                        if y <= 0.0 {
                            *x = 0.0;
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::Sparse(a, s) => {
                    let ga = s.apply_transpose(&g);
                    acc(&mut grads, *a, ga);
                }
                Op::ColSum(a) => {
                    let rows = self.value(*a).rows;
                    let data = (0..rows).flat_map(|_| g.data.iter().copied()).collect();
                    acc(&mut grads, *a, Matrix::from_vec(rows, g.cols, data));
                }
                Op::BroadcastRows(a) => {
                    let mut ga = Matrix::zeros(1, g.cols);
                    for r in 0..g.rows {
                        for (o, &x) in ga.data.iter_mut().zip(g.row(r)) {
                            *o += x;
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::Concat(parts) => {
                    let mut c0 = 0;
                    for &p in parts {
                        let cols = self.value(p).cols;
                        let mut gp = Matrix::zeros(g.rows, cols);
                        for r in 0..g.rows {
                            gp.row_mut(r).copy_from_slice(&g.row(r)[c0..c0 + cols]);
                        }
                        c0 += cols;
                        acc(&mut grads, p, gp);
                    }
                }
                Op::ChannelMatMul(a, b, n) => {
                    let n = *n;
                    let (x, y) = (self.value(*a), self.value(*b));
                    let c = x.cols;
                    let mut ga = Matrix::zeros(n * n, c);
                    let mut gb = Matrix::zeros(n * n, c);
                    for i in 0..n {
                        for j in 0..n {
                            for k in 0..n {
                                let gr = g.row(i * n + k);
                                let xr = x.row(i * n + j);
                                let yr = y.row(j * n + k);
                                for ch in 0..c {
                                    ga[(i * n + j, ch)] += gr[ch] * yr[ch];
                                    gb[(j * n + k, ch)] += xr[ch] * gr[ch];
                                }
                            }
                        }
                    }
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::EquivPool(a, n) => {
                    let n = *n;
                    let c = self.value(*a).cols;
                    let inv = if n == 0 { 0.0 } else { 1.0 / n as f64 };
                    let mut diag_mean = vec![0.0; c];
                    let mut total_mean = vec![0.0; c];
                    for i in 0..n {
                        for ch in 0..c {
                            diag_mean[ch] += g[(i, 3 * c + ch)];
                            total_mean[ch] += g[(i, 4 * c + ch)];
                        }
                    }
                    let mut ga = Matrix::zeros(n * n, c);
                    for i in 0..n {
                        for j in 0..n {
                            let o = ga.row_mut(i * n + j);
                            for ch in 0..c {
                                o[ch] = (g[(i, c + ch)] + g[(j, 2 * c + ch)]) * inv + total_mean[ch] * inv * inv;
                                if i == j {
                                    o[ch] += g[(i, ch)] + diag_mean[ch] * inv;
                                }
                            }
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
            }
        }
        dtheta
    }
}
