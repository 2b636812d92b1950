//! Monte Carlo tree search over normalised rewards.
//!
//! Each node keeps the mean `μ` and standard deviation `σ` of the returns of
//! random playouts from its state. Edge statistics hold *normalised* values
//! `(r − μ)/σ`, which makes the search insensitive to the scale and offset of
//! a problem's rewards: the same PUCT constant works for covers of size 5 and
//! cuts of size 500.
//!
//! The tree lives in an arena; [`SearchTree::advance`] promotes the child of
//! the taken action to root and drops everything else, so consecutive moves
//! of one episode reuse their statistics.

use crate::env::{Action, Environment, State};
use crate::error::{Error, Result};
use crate::gnn::PolicyValue;
use crate::rng::Rng;
use rand::Rng as _;
use rand_distr::{Distribution, Gamma};

/// Floor applied to `σ` when every random playout returned the same value.
pub const SIGMA_FLOOR: f64 = 1.0;
const SIGMA_EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct MctsConfig {
    pub c_puct: f64,
    /// Iterations per move are `c_iter · |A_s|`.
    pub c_iter: f64,
    /// Temperature of the returned policy; `0` means argmax.
    pub tau: f64,
    pub dirichlet_alpha: f64,
    pub dirichlet_eps: f64,
    /// Root prior noise on or off.
    pub noise: bool,
    /// Random playouts per expanded node.
    pub rollouts: usize,
}

impl Default for MctsConfig {
    fn default() -> Self {
        MctsConfig { c_puct: 1.5, c_iter: 4.0, tau: 1.0, dirichlet_alpha: 0.03, dirichlet_eps: 0.25, noise: true, rollouts: 20 }
    }
}

impl MctsConfig {
    /// Training defaults for a problem (`c_iter` is 3 for the minimisation problems).
    pub fn for_problem(problem: crate::env::Problem) -> Self {
        MctsConfig { c_iter: problem.default_c_iter(), ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.c_puct, self.c_iter, self.dirichlet_alpha];
        if positive.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::input(format!("c_puct, c_iter and dirichlet_alpha must be positive: {self:?}")));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) || !(0.0..=1.0).contains(&self.dirichlet_eps) || self.rollouts == 0 {
            return Err(Error::input(format!("invalid search config: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EdgeStats {
    pub n: u32,
    pub w: f64,
    pub q: f64,
    pub p: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeStats {
    pub mu: f64,
    pub sigma: f64,
}

struct Node {
    state: State,
    terminal: bool,
    expanded: bool,
    stats: NodeStats,
    /// Network prior before root noise.
    prior: Vec<f64>,
    value_estimate: f64,
    edges: Vec<EdgeStats>,
    rewards: Vec<i64>,
    children: Vec<Option<usize>>,
}

impl Node {
    fn new(env: &dyn Environment, state: State) -> Self {
        let terminal = env.is_terminal(&state);
        Node {
            state,
            terminal,
            expanded: false,
            stats: NodeStats { mu: 0.0, sigma: SIGMA_FLOOR },
            prior: Vec::new(),
            value_estimate: 0.0,
            edges: Vec::new(),
            rewards: Vec::new(),
            children: Vec::new(),
        }
    }
}

/// Mean and population standard deviation of the returns of `k` uniformly
/// random playouts from `s`; `σ` is floored to [`SIGMA_FLOOR`] when it is
/// (numerically) zero. Terminal states give `(0, SIGMA_FLOOR)`.
pub fn estimate_random_stats(env: &dyn Environment, s: &State, k: usize, rng: &mut Rng) -> NodeStats {
    let mut returns = Vec::with_capacity(k);
    for _ in 0..k {
        returns.push(random_playout(env, s, rng) as f64);
    }
    let mean = if k == 0 { 0.0 } else { returns.iter().sum::<f64>() / k as f64 };
    let var = if k == 0 { 0.0 } else { returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / k as f64 };
    let sigma = var.sqrt();
    NodeStats { mu: mean, sigma: if sigma < SIGMA_EPS { SIGMA_FLOOR } else { sigma } }
}

/// Cumulative reward of one uniformly random episode from `s`.
pub fn random_playout(env: &dyn Environment, s: &State, rng: &mut Rng) -> i64 {
    let mut total = 0;
    let mut cur = s.clone();
    loop {
        let k = env.num_actions(&cur);
        if k == 0 {
            return total;
        }
        let a = Action::from_index(env.problem(), rng.random_range(0..k));
        total += env.reward(&cur, a);
        cur = env.next_state(&cur, a);
    }
}

/// PUCT choice: `argmax Q + c·P·√ΣN / (1 + N)`, ties to the larger prior,
/// then to the lower index.
pub fn select(edges: &[EdgeStats], c_puct: f64) -> usize {
    let total: u32 = edges.iter().map(|e| e.n).sum();
    let sqrt_total = (total as f64).sqrt();
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, e) in edges.iter().enumerate() {
        let score = e.q + c_puct * e.p * sqrt_total / (1.0 + e.n as f64);
        if score > best_score || (score == best_score && e.p > edges[best].p) {
            best = i;
            best_score = score;
        }
    }
    best
}

/// Un-normalised value of a state: `0` if terminal, else `μ + σ·max v`.
pub fn estimate_state_value(terminal: bool, v: &[f64], stats: NodeStats) -> f64 {
    if terminal {
        return 0.0;
    }
    let best = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    stats.mu + stats.sigma * best
}

/// One step of the backward pass: moves `r` across the edge into its
/// parent, records the normalised value on the edge and returns the new `r`.
pub fn backup_step(r: f64, reward: i64, parent: NodeStats, edge: &mut EdgeStats) -> f64 {
    let r = r + reward as f64;
    let normalized = (r - parent.mu) / parent.sigma;
    edge.w += normalized;
    edge.n += 1;
    edge.q = edge.w / edge.n as f64;
    r
}

/// `π_a ∝ N_a^{1/τ}`; `τ = 0` is one-hot on a most-visited action, ties
/// broken uniformly at random.
pub fn policy_from_counts(counts: &[u32], tau: f64, rng: &mut Rng) -> Vec<f64> {
    let mut pi = vec![0.0; counts.len()];
    if counts.is_empty() {
        return pi;
    }
    let max = *counts.iter().max().unwrap();
    if tau == 0.0 || max == 0 {
        let ties: Vec<usize> = (0..counts.len()).filter(|&i| counts[i] == max).collect();
        pi[ties[rng.random_range(0..ties.len())]] = 1.0;
        return pi;
    }
    // scale by the max count first so large exponents stay finite
    let weights: Vec<f64> = counts.iter().map(|&c| (c as f64 / max as f64).powf(1.0 / tau)).collect();
    let sum: f64 = weights.iter().sum();
    for (p, w) in pi.iter_mut().zip(weights) {
        *p = w / sum;
    }
    pi
}

/// Symmetric Dirichlet sample via normalised gamma draws. Falls back to the
/// uniform vector if every draw underflows.
pub fn dirichlet(alpha: f64, k: usize, rng: &mut Rng) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).expect("positive alpha");
    let mut eta: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
    let sum: f64 = eta.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        eta.iter_mut().for_each(|x| *x /= sum);
    } else {
        eta.fill(1.0 / k as f64);
    }
    eta
}

/// Search tree rooted at the current state of an episode.
pub struct SearchTree<'e> {
    env: &'e dyn Environment,
    cfg: MctsConfig,
    nodes: Vec<Node>,
    root: usize,
}

impl<'e> SearchTree<'e> {
    pub fn new(env: &'e dyn Environment, root: State, cfg: MctsConfig) -> Result<Self> {
        cfg.validate()?;
        let node = Node::new(env, root);
        Ok(SearchTree { env, cfg, nodes: vec![node], root: 0 })
    }

    pub fn config(&self) -> &MctsConfig {
        &self.cfg
    }

    pub fn root_state(&self) -> &State {
        &self.nodes[self.root].state
    }

    pub fn root_is_terminal(&self) -> bool {
        self.nodes[self.root].terminal
    }

    /// Random-playout statistics of the root, once it has been expanded.
    pub fn root_stats(&self) -> Option<NodeStats> {
        let root = &self.nodes[self.root];
        root.expanded.then_some(root.stats)
    }

    /// Edge statistics of the root in action-index order (empty until expanded).
    pub fn root_edges(&self) -> &[EdgeStats] {
        &self.nodes[self.root].edges
    }

    /// Network prior at the root, before noise.
    pub fn root_prior(&self) -> &[f64] {
        &self.nodes[self.root].prior
    }

    pub fn root_visits(&self) -> u32 {
        self.root_edges().iter().map(|e| e.n).sum()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn expand(&mut self, id: usize, net: &dyn PolicyValue, rng: &mut Rng) -> Result<()> {
        let env = self.env;
        let node = &mut self.nodes[id];
        let out = net.evaluate(env, &node.state)?;
        let k = env.num_actions(&node.state);
        if out.p.len() != k || out.v.len() != k {
            return Err(Error::contract(format!("network returned {} priors for {k} actions", out.p.len())));
        }
        node.stats = estimate_random_stats(env, &node.state, self.cfg.rollouts, rng);
        node.value_estimate = estimate_state_value(false, &out.v, node.stats);
        node.edges = out.p.iter().map(|&p| EdgeStats { p, ..Default::default() }).collect();
        node.rewards = (0..k).map(|a| env.reward(&node.state, Action::from_index(env.problem(), a))).collect();
        node.children = vec![None; k];
        node.prior = out.p;
        node.expanded = true;
        if id == self.root {
            self.apply_root_noise(rng);
        }
        Ok(())
    }

    fn apply_root_noise(&mut self, rng: &mut Rng) {
        if !self.cfg.noise {
            return;
        }
        let (alpha, eps) = (self.cfg.dirichlet_alpha, self.cfg.dirichlet_eps);
        let root = &mut self.nodes[self.root];
        let eta = dirichlet(alpha, root.prior.len(), rng);
        for ((e, &p), n) in root.edges.iter_mut().zip(&root.prior).zip(eta) {
            e.p = (1.0 - eps) * p + eps * n;
        }
    }

    fn child(&mut self, id: usize, a: usize) -> usize {
        if let Some(c) = self.nodes[id].children[a] {
            return c;
        }
        let env = self.env;
        let state = env.next_state(&self.nodes[id].state, Action::from_index(env.problem(), a));
        self.nodes.push(Node::new(env, state));
        let c = self.nodes.len() - 1;
        self.nodes[id].children[a] = Some(c);
        c
    }

    /// One select / expand / backup iteration.
    pub fn iterate(&mut self, net: &dyn PolicyValue, rng: &mut Rng) -> Result<()> {
        if self.nodes[self.root].terminal {
            return Err(Error::contract("search from a terminal state"));
        }
        let mut path = Vec::new();
        let mut id = self.root;
        while self.nodes[id].expanded && !self.nodes[id].terminal {
            let a = select(&self.nodes[id].edges, self.cfg.c_puct);
            path.push((id, a));
            id = self.child(id, a);
        }
        if !self.nodes[id].terminal {
            self.expand(id, net, rng)?;
        }
        let mut r = if self.nodes[id].terminal { 0.0 } else { self.nodes[id].value_estimate };
        for &(parent, a) in path.iter().rev() {
            let node = &mut self.nodes[parent];
            let reward = node.rewards[a];
            r = backup_step(r, reward, node.stats, &mut node.edges[a]);
        }
        Ok(())
    }

    /// Runs iterations while `ΣN(root) ≤ c_iter·|A|` and returns `π`.
    pub fn search(&mut self, net: &dyn PolicyValue, rng: &mut Rng) -> Result<Vec<f64>> {
        if self.nodes[self.root].terminal {
            return Err(Error::contract("search from a terminal state"));
        }
        let actions = self.env.num_actions(self.root_state()) as f64;
        let budget = self.cfg.c_iter * actions;
        while !self.nodes[self.root].expanded || self.root_visits() as f64 <= budget {
            self.iterate(net, rng)?;
        }
        let counts: Vec<u32> = self.root_edges().iter().map(|e| e.n).collect();
        Ok(policy_from_counts(&counts, self.cfg.tau, rng))
    }

    /// Makes the child of action `a` the new root, discarding the rest of
    /// the tree. Root noise is redrawn if the new root is already expanded.
    pub fn advance(&mut self, a: usize, rng: &mut Rng) -> Result<()> {
        let env = self.env;
        let root = &self.nodes[self.root];
        if root.terminal || a >= env.num_actions(&root.state) {
            return Err(Error::contract(format!("cannot advance by action {a}")));
        }
        let new_root = if root.expanded {
            self.child(self.root, a)
        } else {
            let state = env.next_state(&root.state, Action::from_index(env.problem(), a));
            self.nodes.push(Node::new(env, state));
            self.nodes.len() - 1
        };
        self.compact(new_root);
        if self.nodes[self.root].expanded {
            let root = &mut self.nodes[self.root];
            for (e, &p) in root.edges.iter_mut().zip(&root.prior) {
                e.p = p;
            }
            self.apply_root_noise(rng);
        }
        Ok(())
    }

    /// Keeps only the subtree under `keep`, renumbered depth-first.
    fn compact(&mut self, keep: usize) {
        let mut old = std::mem::take(&mut self.nodes);
        let mut remap = vec![usize::MAX; old.len()];
        let mut order = vec![keep];
        let mut i = 0;
        while i < order.len() {
            let id = order[i];
            remap[id] = i;
            order.extend(old[id].children.iter().flatten().copied());
            i += 1;
        }
        self.nodes = order
            .iter()
            .map(|&id| {
                let mut node = std::mem::replace(&mut old[id], Node::new(self.env, State::new(crate::Graph::empty(0))));
                for c in node.children.iter_mut().flatten() {
                    *c = remap[*c];
                }
                node
            })
            .collect();
        self.root = 0;
    }
}

/// Search from `s0` with a fresh tree and return `π`.
pub fn run_mcts(env: &dyn Environment, s0: &State, net: &dyn PolicyValue, cfg: &MctsConfig, rng: &mut Rng) -> Result<Vec<f64>> {
    SearchTree::new(env, s0.clone(), cfg.clone())?.search(net, rng)
}
