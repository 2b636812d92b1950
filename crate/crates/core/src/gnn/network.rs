use super::model::{forward, layout, param_count, Dims, GraphOps, ModelKind};
use super::tape::Tape;
use super::Matrix;
use crate::env::{Environment, Problem, State};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use rand::Rng as _;

/// Policy over the actions of a state plus one normalised value per action.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkOutput {
    pub p: Vec<f64>,
    pub v: Vec<f64>,
}

/// Anything that can score a state: trained networks and test stubs.
pub trait PolicyValue: Sync + Send {
    fn evaluate(&self, env: &dyn Environment, s: &State) -> Result<NetworkOutput>;
}

/// Uniform policy and zero values.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformStub;

impl PolicyValue for UniformStub {
    fn evaluate(&self, env: &dyn Environment, s: &State) -> Result<NetworkOutput> {
        let k = env.num_actions(s);
        if k == 0 {
            return Err(Error::contract("network evaluated on a terminal state"));
        }
        Ok(NetworkOutput { p: vec![1.0 / k as f64; k], v: vec![0.0; k] })
    }
}

/// Splits per-node outputs (`K` logits then `K` values per row) into a joint
/// softmax policy and the raw value vector, in action-index order.
pub fn head(y: &Matrix, k: usize) -> Result<NetworkOutput> {
    if y.rows == 0 {
        return Err(Error::contract("policy head on a state without actions"));
    }
    if y.cols != 2 * k {
        return Err(Error::input(format!("head expects {} channels, got {}", 2 * k, y.cols)));
    }
    let mut logits = Vec::with_capacity(y.rows * k);
    let mut v = Vec::with_capacity(y.rows * k);
    for r in 0..y.rows {
        let row = y.row(r);
        logits.extend_from_slice(&row[..k]);
        v.extend_from_slice(&row[k..]);
    }
    Ok(NetworkOutput { p: softmax(&logits), v })
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

/// Parameters of one network. Weights are stored as `f32`; forward and
/// backward passes run in `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub kind: ModelKind,
    pub dims: Dims,
    pub weights: Vec<f32>,
}

/// Initial scale applied to the S2V aggregation matrices.
const S2V_SUM_GAIN: f64 = 0.05;

impl Params {
    /// Glorot-uniform weights, zero biases.
    pub fn init(kind: ModelKind, dims: Dims, seed: u64) -> Result<Self> {
        dims.validate(kind)?;
        let mut rng = stream_rng(seed, 0x696e_6974);
        let mut weights = Vec::with_capacity(param_count(kind, &dims));
        for spec in layout(kind, &dims) {
            if spec.is_bias() {
                weights.extend(std::iter::repeat_n(0.0f32, spec.len()));
            } else {
                let mut bound = (6.0 / (spec.rows + spec.cols) as f64).sqrt();
                // S2V sums over neighbours (theta2) and over the whole graph
                // (theta4); a plain Glorot scale lets activations grow with
                // degree^L on dense graphs, so those two start small.
                if kind == ModelKind::S2v && (spec.name == "theta2" || spec.name == "theta4") {
                    bound *= S2V_SUM_GAIN;
                }
                weights.extend((0..spec.len()).map(|_| rng.random_range(-bound..bound) as f32));
            }
        }
        Ok(Params { kind, dims, weights })
    }

    /// Standard-size network for `problem`.
    pub fn for_problem(kind: ModelKind, problem: Problem, seed: u64) -> Result<Self> {
        let dims = Dims::standard(kind, problem.feature_dim(), 2 * problem.actions_per_node());
        Self::init(kind, dims, seed)
    }

    pub fn zeros(kind: ModelKind, dims: Dims) -> Self {
        Params { kind, dims, weights: vec![0.0; param_count(kind, &dims)] }
    }

    pub fn theta(&self) -> Vec<f64> {
        self.weights.iter().map(|&w| w as f64).collect()
    }

    pub fn set_theta(&mut self, theta: &[f64]) {
        assert_eq!(theta.len(), self.weights.len());
        for (w, &t) in self.weights.iter_mut().zip(theta) {
            *w = t as f32;
        }
    }

    pub fn squared_norm(&self) -> f64 {
        self.weights.iter().map(|&w| (w as f64) * (w as f64)).sum()
    }

    /// Per-node outputs for a state.
    pub fn node_outputs(&self, env: &dyn Environment, s: &State) -> Matrix {
        node_outputs_theta(self.kind, &self.dims, &self.theta(), &env.node_features(s), &GraphOps::new(&s.graph))
    }

    /// Errors unless the network's input/output widths fit `problem`.
    pub fn check_problem(&self, problem: Problem) -> Result<()> {
        if self.dims.in_dim != problem.feature_dim() || self.dims.out_dim != 2 * problem.actions_per_node() {
            return Err(Error::input(format!(
                "network dims (in {}, out {}) do not fit problem {problem}",
                self.dims.in_dim, self.dims.out_dim
            )));
        }
        Ok(())
    }
}

impl PolicyValue for Params {
    fn evaluate(&self, env: &dyn Environment, s: &State) -> Result<NetworkOutput> {
        self.check_problem(env.problem())?;
        if env.is_terminal(s) {
            return Err(Error::contract("network evaluated on a terminal state"));
        }
        head(&self.node_outputs(env, s), env.problem().actions_per_node())
    }
}

pub fn node_outputs_theta(kind: ModelKind, dims: &Dims, theta: &[f64], features: &Matrix, ops: &GraphOps) -> Matrix {
    let mut tape = Tape::new();
    let out = forward(&mut tape, kind, dims, theta, features, ops);
    tape.value(out).clone()
}

/// One training example `(s, a, π, z′)` in network terms.
#[derive(Clone, Debug)]
pub struct Example<'a> {
    pub state: &'a State,
    /// Action index in the per-node layout.
    pub action: usize,
    pub pi: &'a [f64],
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub loss: f64,
    /// Same layout as [`Params::weights`].
    pub grads: Vec<f64>,
}

/// `(z′ − v_a)² + CE(p, π) + c_reg‖θ‖²` averaged over the batch, and its
/// gradient with respect to every parameter.
pub fn loss_and_gradients(params: &Params, env: &dyn Environment, batch: &[Example], c_reg: f64) -> Result<Gradients> {
    params.check_problem(env.problem())?;
    let (loss, grads) = loss_and_grad_theta(params.kind, &params.dims, &params.theta(), env, batch, c_reg)?;
    Ok(Gradients { loss, grads })
}

/// [`loss_and_gradients`] at an arbitrary `f64` parameter vector.
pub fn loss_and_grad_theta(
    kind: ModelKind,
    dims: &Dims,
    theta: &[f64],
    env: &dyn Environment,
    batch: &[Example],
    c_reg: f64,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::contract("empty minibatch"));
    }
    let k = env.problem().actions_per_node();
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    let mut grads = vec![0.0; theta.len()];
    for (index, ex) in batch.iter().enumerate() {
        let ops = GraphOps::new(&ex.state.graph);
        let mut tape = Tape::new();
        let out = forward(&mut tape, kind, dims, theta, &env.node_features(ex.state), &ops);
        let y = tape.value(out);
        let NetworkOutput { p, v } = head(y, k)?;
        if ex.pi.len() != p.len() || ex.action >= p.len() {
            return Err(Error::contract(format!("example {index} does not match its state's action count")));
        }
        let value_err = v[ex.action] - ex.z;
        let ce: f64 = ex.pi.iter().zip(&p).filter(|(&t, _)| t > 0.0).map(|(&t, &q)| -t * q.ln()).sum();
        let loss = value_err * value_err + ce;
        if !loss.is_finite() {
            return Err(Error::NonFinite { index });
        }
        total += loss * scale;

        let mut seed = Matrix::zeros(y.rows, y.cols);
        let pi_sum: f64 = ex.pi.iter().sum();
        for a in 0..p.len() {
            let (node, slot) = (a / k, a % k);
            seed[(node, slot)] = (pi_sum * p[a] - ex.pi[a]) * scale;
        }
        seed[(ex.action / k, k + ex.action % k)] += 2.0 * value_err * scale;
        for (g, d) in grads.iter_mut().zip(tape.backward(out, seed, theta.len())) {
            *g += d;
        }
    }
    let norm: f64 = theta.iter().map(|t| t * t).sum();
    total += c_reg * norm;
    for (g, &t) in grads.iter_mut().zip(theta) {
        *g += 2.0 * c_reg * t;
    }
    if !total.is_finite() {
        return Err(Error::NonFinite { index: 0 });
    }
    Ok((total, grads))
}
