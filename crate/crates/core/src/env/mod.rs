//! Deterministic MDPs over labelled graphs, one per problem.
//!
//! A state is a graph plus a per-node label; an episode repeatedly picks an
//! action, collects an integer reward and moves to a smaller graph until a
//! terminal state is reached. The sum of rewards along the best trajectory
//! from `init(G₀)` equals the optimum of the original problem on `G₀`
//! (negated for the minimisation problems).

mod certificate;
mod oracle;
mod rules;

pub use certificate::{extract_certificate, replay_reward, verify_certificate, Certificate};
pub use oracle::{oracle_mdp_optimal, oracle_optimal, DEFAULT_ORACLE_CAP};
pub use rules::{FvsEnv, MaxCliqueEnv, MaxCutEnv, MisEnv, MvcEnv, ScaledRewards};

use crate::error::{Error, Result};
use crate::gnn::Matrix;
use crate::graph::{Graph, IdMap};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Mvc,
    MaxCut,
    MaxClique,
    Mis,
    Fvs,
}

impl Problem {
    pub const ALL: [Problem; 5] = [Problem::Mvc, Problem::MaxCut, Problem::MaxClique, Problem::Mis, Problem::Fvs];

    pub fn name(self) -> &'static str {
        match self {
            Problem::Mvc => "mvc",
            Problem::MaxCut => "maxcut",
            Problem::MaxClique => "maxclique",
            Problem::Mis => "mis",
            Problem::Fvs => "fvs",
        }
    }

    /// Actions per node: two colours for max cut, one otherwise.
    pub fn actions_per_node(self) -> usize {
        if self == Problem::MaxCut { 2 } else { 1 }
    }

    /// Width of the per-node input features.
    pub fn feature_dim(self) -> usize {
        if self == Problem::MaxCut { 2 } else { 1 }
    }

    /// Minimisation problems carry negative rewards.
    pub fn is_minimization(self) -> bool {
        matches!(self, Problem::Mvc | Problem::Fvs)
    }

    /// Converts a cumulative MDP reward into the problem objective.
    pub fn objective_from_reward(self, total: i64) -> i64 {
        if self.is_minimization() { -total } else { total }
    }

    /// True if objective `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        if self.is_minimization() { a < b } else { a > b }
    }

    /// Per-problem rule object.
    pub fn env(self) -> &'static dyn Environment {
        match self {
            Problem::Mvc => &MvcEnv,
            Problem::MaxCut => &MaxCutEnv,
            Problem::MaxClique => &MaxCliqueEnv,
            Problem::Mis => &MisEnv,
            Problem::Fvs => &FvsEnv,
        }
    }

    /// Default MCTS iteration coefficient.
    pub fn default_c_iter(self) -> f64 {
        if self.is_minimization() { 3.0 } else { 4.0 }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Problem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Problem::ALL
            .into_iter()
            .find(|p| p.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::input(format!("unknown problem {s:?} (expected mvc, maxcut, maxclique, mis, fvs)")))
    }
}

/// Labelled graph `(G, d)` plus the map from current to original node ids.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct State {
    pub graph: Arc<Graph>,
    /// Max-cut counters `(l₁, l₂)`: neighbours already coloured 1 and 2.
    /// All zeros for the other problems.
    pub labels: Vec<[u32; 2]>,
    /// `origin[v]` is the id of current node `v` in the initial graph.
    pub origin: Vec<usize>,
}

impl State {
    pub fn new(graph: Graph) -> Self {
        let n = graph.n();
        State { graph: Arc::new(graph), labels: vec![[0, 0]; n], origin: (0..n).collect() }
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// Successor state after a renumbering `map[new] = old`.
    pub(crate) fn restrict(&self, graph: Graph, map: &IdMap) -> State {
        State {
            graph: Arc::new(graph),
            labels: map.iter().map(|&old| self.labels[old]).collect(),
            origin: map.iter().map(|&old| self.origin[old]).collect(),
        }
    }
}

/// Node choice, plus a colour in `{1, 2}` for max cut.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub node: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub color: Option<u8>,
}

impl Action {
    pub fn node(node: usize) -> Self {
        Action { node, color: None }
    }

    pub fn colored(node: usize, color: u8) -> Self {
        Action { node, color: Some(color) }
    }

    /// Position in the per-node action layout (`K` contiguous slots per node).
    pub fn index(&self, problem: Problem) -> usize {
        match self.color {
            Some(c) => self.node * problem.actions_per_node() + (c as usize - 1),
            None => self.node * problem.actions_per_node(),
        }
    }

    pub fn from_index(problem: Problem, index: usize) -> Self {
        if problem == Problem::MaxCut {
            Action::colored(index / 2, (index % 2) as u8 + 1)
        } else {
            Action::node(index)
        }
    }
}

/// Rule object of one MDP. States are immutable values; implementations hold
/// no mutable state and are shareable across threads.
pub trait Environment: Sync + Send {
    fn problem(&self) -> Problem;

    fn init(&self, g: &Graph) -> State;

    fn is_terminal(&self, s: &State) -> bool;

    /// Immediate reward; the action must be valid for `s`.
    fn reward(&self, s: &State, a: Action) -> i64;

    /// Successor state; the action must be valid for `s`.
    fn next_state(&self, s: &State, a: Action) -> State;

    fn num_actions(&self, s: &State) -> usize {
        if self.is_terminal(s) { 0 } else { s.n() * self.problem().actions_per_node() }
    }

    fn actions(&self, s: &State) -> Vec<Action> {
        (0..self.num_actions(s)).map(|i| Action::from_index(self.problem(), i)).collect()
    }

    fn check_action(&self, s: &State, a: Action) -> Result<()> {
        if self.is_terminal(s) {
            return Err(Error::contract("action on a terminal state"));
        }
        if a.node >= s.n() {
            return Err(Error::contract(format!("action node {} out of range for n = {}", a.node, s.n())));
        }
        let colored = self.problem() == Problem::MaxCut;
        match a.color {
            Some(1 | 2) if colored => Ok(()),
            None if !colored => Ok(()),
            _ => Err(Error::contract(format!("action {a:?} invalid for {}", self.problem()))),
        }
    }

    /// Checked transition: returns the successor state and the immediate reward.
    fn step(&self, s: &State, a: Action) -> Result<(State, i64)> {
        self.check_action(s, a)?;
        Ok((self.next_state(s, a), self.reward(s, a)))
    }

    /// Per-node input features: `(l₁, l₂)` for max cut, a column of ones otherwise.
    fn node_features(&self, s: &State) -> Matrix {
        if self.problem() == Problem::MaxCut {
            Matrix::from_vec(s.n(), 2, s.labels.iter().flat_map(|l| [l[0] as f64, l[1] as f64]).collect())
        } else {
            Matrix::filled(s.n(), 1, 1.0)
        }
    }
}
