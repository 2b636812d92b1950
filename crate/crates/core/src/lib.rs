//! Self-play Monte Carlo tree search with graph neural networks for NP-hard
//! problems on graphs.
//!
//! Each problem (minimum vertex cover, max cut, maximum clique, maximum
//! independent set, minimum feedback vertex set) is cast as a deterministic
//! MDP over labelled graphs ([`env`]). A search ([`mcts`]) guided by a GNN
//! policy/value network ([`gnn`]) scores actions by how much better they do
//! than random play, and the networks are trained from self-play records
//! ([`training`]). Randomised classical baselines ([`baselines`]) and
//! brute-force oracles ([`env::oracle_optimal`]) serve as comparators.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod baselines;
pub mod cli;
pub mod env;
pub mod error;
pub mod generators;
pub mod gnn;
pub mod graph;
pub mod mcts;
pub mod rng;
pub mod solve;
pub mod training;

pub use env::{Action, Certificate, Environment, Problem, State};
pub use error::{Error, Result};
pub use graph::{Graph, NodeSet};
