use super::*;
use crate::env::{Problem, State};
use crate::graph::Graph;
use crate::rng::stream_rng;
use rand::Rng as _;

type M = Vec<Vec<f64>>;

/// Naive dense re-implementation of every backbone, written from the layer
/// formulas without the tape.
mod reference {
    use super::*;

    pub struct Weights<'a> {
        theta: &'a [f64],
        pos: usize,
    }

    impl Weights<'_> {
        pub fn take(&mut self, rows: usize, cols: usize) -> M {
            let m = (0..rows).map(|r| self.theta[self.pos + r * cols..self.pos + (r + 1) * cols].to_vec()).collect();
            self.pos += rows * cols;
            m
        }
    }

    pub fn mm(a: &M, b: &M) -> M {
        a.iter()
            .map(|row| (0..b[0].len()).map(|j| row.iter().zip(b).map(|(x, br)| x * br[j]).sum()).collect())
            .collect()
    }

    fn relu(a: &M) -> M {
        a.iter().map(|r| r.iter().map(|&x| x.max(0.0)).collect()).collect()
    }

    fn add(a: &M, b: &M) -> M {
        a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect()).collect()
    }

    fn bias(a: &M, b: &M) -> M {
        a.iter().map(|r| r.iter().zip(&b[0]).map(|(x, y)| x + y).collect()).collect()
    }

    fn hcat(a: &M, b: &M) -> M {
        a.iter().zip(b).map(|(x, y)| x.iter().chain(y).copied().collect()).collect()
    }

    fn mlp(w: &mut Weights, x: &M, sizes: &[usize]) -> M {
        let mut h = x.clone();
        for (i, s) in sizes.windows(2).enumerate() {
            let wm = w.take(s[0], s[1]);
            let b = w.take(1, s[1]);
            h = bias(&mm(&h, &wm), &b);
            if i + 2 < sizes.len() {
                h = relu(&h);
            }
        }
        h
    }

    fn sizes(input: usize, output: usize, d: &Dims) -> Vec<usize> {
        let mut s = vec![input];
        s.extend(std::iter::repeat_n(d.mlp_hidden, d.mlp_layers - 1));
        s.push(output);
        s
    }

    fn dense_adj(g: &Graph, self_loops: bool) -> M {
        let n = g.n();
        let mut a = vec![vec![0.0; n]; n];
        for (u, v) in g.edges() {
            a[u][v] = 1.0;
            a[v][u] = 1.0;
        }
        if self_loops {
            for (i, row) in a.iter_mut().enumerate() {
                row[i] = 1.0;
            }
        }
        a
    }

    pub fn forward(kind: ModelKind, d: &Dims, theta: &[f64], x: &M, g: &Graph) -> M {
        let mut w = Weights { theta, pos: 0 };
        let n = g.n();
        let out = match kind {
            ModelKind::S2v => {
                let p = d.hidden;
                let (t1, t2, t4, t5, t3) =
                    (w.take(d.in_dim, p), w.take(p, p), w.take(p, p), w.take(p, p), w.take(2 * p, d.out_dim));
                let a = dense_adj(g, false);
                let base = mm(x, &t1);
                let mut h = vec![vec![0.0; p]; n];
                for _ in 0..d.layers {
                    h = relu(&add(&base, &mm(&mm(&a, &h), &t2)));
                }
                let sum: Vec<f64> = (0..p).map(|j| h.iter().map(|r| r[j]).sum()).collect();
                let global = mm(&vec![sum; n], &t4);
                let local = mm(&h, &t5);
                mm(&relu(&hcat(&global, &local)), &t3)
            }
            ModelKind::Gcn => {
                let a = dense_adj(g, true);
                let deg: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
                let norm: M = (0..n).map(|i| (0..n).map(|j| a[i][j] / (deg[i] * deg[j]).sqrt()).collect()).collect();
                let mut h = x.clone();
                for l in 0..d.layers {
                    let wl = w.take(if l == 0 { d.in_dim } else { d.hidden }, d.hidden);
                    h = relu(&mm(&mm(&norm, &h), &wl));
                }
                let (hw, hb) = (w.take(d.hidden, d.out_dim), w.take(1, d.out_dim));
                bias(&mm(&h, &hw), &hb)
            }
            ModelKind::Gin => {
                let a = dense_adj(g, true);
                let mut h = x.clone();
                let mut cat = x.clone();
                for l in 0..d.layers {
                    let fan_in = if l == 0 { d.in_dim } else { d.hidden };
                    h = mlp(&mut w, &mm(&a, &h), &sizes(fan_in, d.hidden, d));
                    cat = hcat(&cat, &h);
                }
                mlp(&mut w, &cat, &sizes(d.in_dim + d.layers * d.hidden, d.out_dim, d))
            }
            ModelKind::Ign2p => {
                // tensor stored as [i][j][channel]
                let a = dense_adj(g, false);
                let mut t: Vec<Vec<Vec<f64>>> = (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                let mut c = vec![a[i][j]];
                                c.extend((0..d.in_dim).map(|k| if i == j { x[i][k] } else { 0.0 }));
                                c
                            })
                            .collect()
                    })
                    .collect();
                let mut c = d.in_dim + 1;
                let mut y = vec![vec![0.0; d.out_dim]; n];
                let flat = |t: &Vec<Vec<Vec<f64>>>| -> M { t.iter().flatten().cloned().collect() };
                let unflat = |m: M| -> Vec<Vec<Vec<f64>>> { m.chunks(n).map(|c| c.to_vec()).collect() };
                for _ in 0..d.layers {
                    let m1 = unflat(mlp(&mut w, &flat(&t), &sizes(c, d.hidden, d)));
                    let m2 = unflat(mlp(&mut w, &flat(&t), &sizes(c, d.hidden, d)));
                    let prod: Vec<Vec<Vec<f64>>> = (0..n)
                        .map(|i| {
                            (0..n)
                                .map(|j| (0..d.hidden).map(|ch| (0..n).map(|k| m1[i][k][ch] * m2[k][j][ch]).sum()).collect())
                                .collect()
                        })
                        .collect();
                    let cat: M = hcat(&flat(&t), &flat(&prod));
                    t = unflat(mlp(&mut w, &cat, &sizes(c + d.hidden, d.hidden, d)));
                    c = d.hidden;
                    let nf = n as f64;
                    let pooled: M = (0..n)
                        .map(|i| {
                            let mut row = Vec::new();
                            row.extend((0..c).map(|ch| t[i][i][ch]));
                            row.extend((0..c).map(|ch| (0..n).map(|j| t[i][j][ch]).sum::<f64>() / nf));
                            row.extend((0..c).map(|ch| (0..n).map(|j| t[j][i][ch]).sum::<f64>() / nf));
                            row.extend((0..c).map(|ch| (0..n).map(|j| t[j][j][ch]).sum::<f64>() / nf));
                            row.extend((0..c).map(|ch| t.iter().flatten().map(|e| e[ch]).sum::<f64>() / (nf * nf)));
                            row
                        })
                        .collect();
                    let (hw, hb) = (w.take(5 * c, d.out_dim), w.take(1, d.out_dim));
                    y = add(&y, &bias(&mm(&pooled, &hw), &hb));
                }
                y
            }
        };
        assert_eq!(w.pos, theta.len());
        out
    }
}

fn small_dims(kind: ModelKind, in_dim: usize, out_dim: usize) -> Dims {
    let mut d = Dims::standard(kind, in_dim, out_dim);
    if kind == ModelKind::S2v {
        d.hidden = 8;
        d.layers = 3;
    }
    if matches!(kind, ModelKind::Gcn | ModelKind::Gin) {
        d.hidden = 6;
        d.layers = 3;
        d.mlp_layers = 3;
        d.mlp_hidden = 5;
    }
    if kind == ModelKind::Ign2p {
        d.hidden = 4;
        d.mlp_hidden = 4;
    }
    d
}

fn random_theta(kind: ModelKind, d: &Dims, seed: u64, scale: f64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 9);
    (0..param_count(kind, d)).map(|_| rng.random_range(-scale..scale)).collect()
}

fn run(kind: ModelKind, d: &Dims, theta: &[f64], x: &Matrix, g: &Graph) -> Matrix {
    node_outputs_theta(kind, d, theta, x, &GraphOps::new(g))
}

fn random_features(n: usize, c: usize, seed: u64) -> Matrix {
    let mut rng = stream_rng(seed, 3);
    Matrix::from_vec(n, c, (0..n * c).map(|_| rng.random_range(-1.0..1.0)).collect())
}

#[test]
fn backbones_match_reference_implementation() {
    let graphs = [Graph::path(5), Graph::petersen(), Graph::from_edges(6, &[(0, 1), (1, 2), (2, 0), (3, 4)]).unwrap()];
    for kind in ModelKind::ALL {
        for (gi, g) in graphs.iter().enumerate() {
            let d = small_dims(kind, 2, 4);
            let theta = random_theta(kind, &d, gi as u64 + 1, 0.5);
            let x = random_features(g.n(), 2, gi as u64);
            let ours = run(kind, &d, &theta, &x, g);
            let rows: M = (0..g.n()).map(|r| x.row(r).to_vec()).collect();
            let want = Matrix::from_rows(&reference::forward(kind, &d, &theta, &rows, g));
            assert!(ours.max_abs_diff(&want) < 1e-6, "{kind} on graph {gi}: {}", ours.max_abs_diff(&want));
        }
    }
}

#[test]
fn standard_sizes_match_reference() {
    let g = Graph::path(6);
    for kind in ModelKind::ALL {
        let d = Dims::standard(kind, 1, 2);
        let theta = random_theta(kind, &d, 5, 0.2);
        let x = Matrix::filled(6, 1, 1.0);
        let want = Matrix::from_rows(&reference::forward(kind, &d, &theta, &vec![vec![1.0]; 6], &g));
        assert!(run(kind, &d, &theta, &x, &g).max_abs_diff(&want) < 1e-6, "{kind}");
    }
}

#[test]
fn s2v_single_node_ignores_theta2() {
    let d = small_dims(ModelKind::S2v, 1, 2);
    let g = Graph::empty(1);
    let x = Matrix::filled(1, 1, 1.0);
    let theta = random_theta(ModelKind::S2v, &d, 3, 1.0);
    let mut other = theta.clone();
    let p = d.hidden;
    for t in &mut other[p..p + p * p] {
        *t = 7.0;
    }
    assert_eq!(run(ModelKind::S2v, &d, &theta, &x, &g), run(ModelKind::S2v, &d, &other, &x, &g));
}

#[test]
fn zero_weights_give_zero_output() {
    let g = Graph::petersen();
    for kind in ModelKind::ALL {
        let d = Dims::standard(kind, 1, 2);
        let y = run(kind, &d, &vec![0.0; param_count(kind, &d)], &Matrix::filled(10, 1, 1.0), &g);
        assert!(y.data.iter().all(|&v| v == 0.0), "{kind}");
    }
}

#[test]
fn gcn_single_node_and_triangle() {
    let d = Dims { in_dim: 1, out_dim: 1, hidden: 1, layers: 1, mlp_layers: 0, mlp_hidden: 0 };
    // layer weight 1, head weight 1, head bias 0: y = relu(Â x)
    let theta = [1.0, 1.0, 0.0];
    let y = run(ModelKind::Gcn, &d, &theta, &Matrix::filled(1, 1, -2.0), &Graph::empty(1));
    assert_eq!(y.data, vec![0.0]);
    let y = run(ModelKind::Gcn, &d, &theta, &Matrix::filled(1, 1, 2.5), &Graph::empty(1));
    assert_eq!(y.data, vec![2.5]);
    // K3: every entry of the normalised Ã is 1/3, so each output is the feature mean
    let x = Matrix::from_vec(3, 1, vec![3.0, 6.0, 0.0]);
    let y = run(ModelKind::Gcn, &d, &theta, &x, &Graph::complete(3));
    for v in y.data {
        assert!((v - 3.0).abs() < 1e-12);
    }
}

#[test]
fn gcn_isolated_twins_agree() {
    let d = Dims::standard(ModelKind::Gcn, 1, 2);
    let theta = random_theta(ModelKind::Gcn, &d, 1, 0.5);
    let y = run(ModelKind::Gcn, &d, &theta, &Matrix::filled(2, 1, 1.0), &Graph::empty(2));
    assert_eq!(y.row(0), y.row(1));
}

#[test]
fn gin_aggregates_self_and_neighbours() {
    // one layer, one-layer MLPs: first MLP identity, suffix reads the H¹ column
    let d = Dims { in_dim: 1, out_dim: 1, hidden: 1, layers: 1, mlp_layers: 1, mlp_hidden: 0 };
    let theta = [1.0, 0.0, 0.0, 1.0, 0.0];
    let y = run(ModelKind::Gin, &d, &theta, &Matrix::filled(3, 1, 1.0), &Graph::path(3));
    assert_eq!(y.data, vec![2.0, 3.0, 2.0]);
}

#[test]
fn gin_zero_features_without_bias_give_zero() {
    let d = Dims::standard(ModelKind::Gin, 1, 2);
    let mut theta = random_theta(ModelKind::Gin, &d, 2, 1.0);
    let mut off = 0;
    for s in layout(ModelKind::Gin, &d) {
        if s.is_bias() {
            theta[off..off + s.len()].fill(0.0);
        }
        off += s.len();
    }
    let y = run(ModelKind::Gin, &d, &theta, &Matrix::zeros(5, 1), &Graph::cycle(5));
    assert!(y.data.iter().all(|&v| v == 0.0));
}

#[test]
fn ign_single_node_input() {
    // one block whose MLPs are single linear layers; check against the
    // reference on X⁽⁰⁾ = [0 ; feature]
    let d = Dims { in_dim: 1, out_dim: 2, hidden: 2, layers: 1, mlp_layers: 1, mlp_hidden: 0 };
    let theta = random_theta(ModelKind::Ign2p, &d, 4, 1.0);
    let x = Matrix::filled(1, 1, 0.7);
    let want = reference::forward(ModelKind::Ign2p, &d, &theta, &vec![vec![0.7]], &Graph::empty(1));
    assert!(run(ModelKind::Ign2p, &d, &theta, &x, &Graph::empty(1)).max_abs_diff(&Matrix::from_rows(&want)) < 1e-12);
}

#[test]
fn edgeless_graphs_are_safe() {
    for kind in ModelKind::ALL {
        let d = Dims::standard(kind, 2, 4);
        let theta = random_theta(kind, &d, 8, 0.3);
        let y = run(kind, &d, &theta, &random_features(4, 2, 1), &Graph::empty(4));
        assert_eq!((y.rows, y.cols), (4, 4));
        assert!(y.data.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn equivariance_under_relabelling() {
    let g = Graph::from_edges(7, &[(0, 1), (1, 2), (2, 3), (3, 0), (3, 4), (4, 5), (5, 6), (6, 4)]).unwrap();
    let mut rng = stream_rng(11, 0);
    for problem in [Problem::Mvc, Problem::MaxCut] {
        let env = problem.env();
        let k = problem.actions_per_node();
        for kind in ModelKind::ALL {
            let params = Params::for_problem(kind, problem, 21).unwrap();
            let mut perm: Vec<usize> = (0..7).collect();
            for i in (1..7).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let mut s = State::new(g.clone());
            let mut t = State::new(g.permute(&perm));
            if problem == Problem::MaxCut {
                for v in 0..7 {
                    s.labels[v] = [v as u32 % 3, (v as u32 * 5) % 4];
                    t.labels[perm[v]] = s.labels[v];
                }
            }
            let a = params.evaluate(env, &s).unwrap();
            let b = params.evaluate(env, &t).unwrap();
            for v in 0..7 {
                for c in 0..k {
                    let (i, j) = (v * k + c, perm[v] * k + c);
                    assert!((a.p[i] - b.p[j]).abs() < 1e-5, "{kind} p");
                    assert!((a.v[i] - b.v[j]).abs() < 1e-5, "{kind} v");
                }
            }
        }
    }
}

#[test]
fn head_examples() {
    let y = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 2.0], vec![0.0, 3.0]]);
    let out = head(&y, 1).unwrap();
    assert_eq!(out.v, vec![1.0, 2.0, 3.0]);
    assert!(out.p.iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-12));

    let y = Matrix::from_rows(&[vec![1e4, 0.0], vec![0.0, 0.0]]);
    let out = head(&y, 1).unwrap();
    assert!(out.p[0] > 1.0 - 1e-12 && out.p[1] < 1e-12);

    assert!(matches!(head(&Matrix::zeros(0, 2), 1), Err(crate::Error::Contract(_))));

    let params = Params::for_problem(ModelKind::Gcn, Problem::MaxCut, 1).unwrap();
    let out = params.evaluate(Problem::MaxCut.env(), &State::new(Graph::path(4))).unwrap();
    assert_eq!((out.p.len(), out.v.len()), (8, 8));
    assert!((out.p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    assert!(out.p.iter().all(|&p| p > 0.0 && p < 1.0));
}

#[test]
fn terminal_state_is_a_contract_violation() {
    let params = Params::for_problem(ModelKind::S2v, Problem::Mvc, 1).unwrap();
    let env = Problem::Mvc.env();
    let s = env.init(&Graph::empty(3));
    assert!(matches!(params.evaluate(env, &s), Err(crate::Error::Contract(_))));
    assert!(matches!(UniformStub.evaluate(env, &s), Err(crate::Error::Contract(_))));
}

#[test]
fn loss_examples() {
    let env = Problem::Mis.env();
    let s = State::new(Graph::path(3));
    let params = Params::for_problem(ModelKind::Gcn, Problem::Mis, 5).unwrap();
    let out = params.evaluate(env, &s).unwrap();
    // p = π and z′ = v_a: the loss is the entropy of π
    let ex = Example { state: &s, action: 1, pi: &out.p, z: out.v[1] };
    let g = loss_and_gradients(&params, env, &[ex], 0.0).unwrap();
    let entropy: f64 = out.p.iter().map(|p| -p * p.ln()).sum();
    assert!((g.loss - entropy).abs() < 1e-9);
    assert_eq!(g.grads.len(), params.weights.len());

    // regulariser alone: ‖θ‖² = 4
    let mut two = Params::zeros(ModelKind::Gcn, params.dims);
    two.weights[0] = 2.0;
    let pi = [1.0 / 3.0; 3];
    let base = loss_and_gradients(&two, env, &[Example { state: &s, action: 0, pi: &pi, z: 0.0 }], 0.0).unwrap();
    let reg = loss_and_gradients(&two, env, &[Example { state: &s, action: 0, pi: &pi, z: 0.0 }], 1e-4).unwrap();
    assert!((reg.loss - base.loss - 4e-4).abs() < 1e-12);
}

#[test]
fn non_finite_loss_reports_sample() {
    let env = Problem::Mis.env();
    let s = State::new(Graph::path(3));
    let params = Params::for_problem(ModelKind::Gcn, Problem::Mis, 5).unwrap();
    let pi = [1.0 / 3.0; 3];
    let good = Example { state: &s, action: 0, pi: &pi, z: 0.0 };
    let bad = Example { z: f64::INFINITY, ..good.clone() };
    let err = loss_and_gradients(&params, env, &[good, bad], 0.0).unwrap_err();
    assert!(matches!(err, crate::Error::NonFinite { index: 1 }));
}

/// Central differences with step 1e−4 on a 6-node state, at a generic
/// parameter point. Zero biases would put many 2-IGN+ pre-activations exactly
/// on the relu kink, where a central difference is meaningless.
fn finite_difference_check(kind: ModelKind, problem: Problem) {
    let env = problem.env();
    let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3)]).unwrap();
    let mut s = State::new(g);
    if problem == Problem::MaxCut {
        for v in 0..6 {
            s.labels[v] = [v as u32 % 2, (v as u32 + 1) % 3];
        }
    }
    let k = env.num_actions(&s);
    let d = Dims::standard(kind, problem.feature_dim(), 2 * problem.actions_per_node());
    let mut theta = Params::init(kind, d, 17).unwrap().theta();
    let noise = random_theta(kind, &d, 18, 0.1);
    let mut off = 0;
    for spec in layout(kind, &d) {
        if spec.is_bias() {
            theta[off..off + spec.len()].copy_from_slice(&noise[off..off + spec.len()]);
        }
        off += spec.len();
    }
    let pi: Vec<f64> = (0..k).map(|i| (i + 1) as f64).collect();
    let total: f64 = pi.iter().sum();
    let pi: Vec<f64> = pi.iter().map(|x| x / total).collect();
    let batch = [
        Example { state: &s, action: 2, pi: &pi, z: 0.7 },
        Example { state: &s, action: k - 1, pi: &pi, z: -1.2 },
    ];
    let c_reg = 1e-4;
    let (_, grads) = loss_and_grad_theta(kind, &d, &theta, env, &batch, c_reg).unwrap();
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    let mut t = theta.clone();
    for i in 0..theta.len() {
        t[i] = theta[i] + h;
        let up = loss_and_grad_theta(kind, &d, &t, env, &batch, c_reg).unwrap().0;
        t[i] = theta[i] - h;
        let down = loss_and_grad_theta(kind, &d, &t, env, &batch, c_reg).unwrap().0;
        t[i] = theta[i];
        let fd = (up - down) / (2.0 * h);
        let scale = grads[i].abs().max(fd.abs());
        let err = (grads[i] - fd).abs();
        // absolute floor for coordinates whose gradient vanishes
        if err > 1e-8 {
            worst = worst.max(err / scale);
        }
    }
    assert!(worst < 1e-4, "{kind}/{problem}: worst relative error {worst:e}");
}

#[test]
fn gradients_match_finite_differences_s2v() {
    finite_difference_check(ModelKind::S2v, Problem::Mvc);
}

#[test]
fn gradients_match_finite_differences_gcn() {
    finite_difference_check(ModelKind::Gcn, Problem::MaxCut);
}

#[test]
fn gradients_match_finite_differences_gin() {
    finite_difference_check(ModelKind::Gin, Problem::Mis);
}

#[test]
fn gradients_match_finite_differences_ign() {
    finite_difference_check(ModelKind::Ign2p, Problem::MaxCut);
}
