//! Seeded random graph families used for training and test instances.

use crate::env::Problem;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{stream_rng, Rng};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Erdős–Rényi G(n, p).
    Er { p: f64 },
    /// Barabási–Albert with `m` edges per new node, grown from K_{m+1}.
    Ba { m: usize },
    /// Watts–Strogatz ring of even degree `k`, rewiring probability `beta`.
    Ws { k: usize, beta: f64 },
    /// Uniform `d`-regular via the pairing model.
    Regular { d: usize },
    /// Uniform labelled tree via a random Prüfer sequence.
    Tree,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub family: Family,
    pub n: usize,
    pub seed: u64,
}

impl GenSpec {
    pub fn er(n: usize, p: f64, seed: u64) -> Self {
        GenSpec { family: Family::Er { p }, n, seed }
    }
    pub fn ba(n: usize, m: usize, seed: u64) -> Self {
        GenSpec { family: Family::Ba { m }, n, seed }
    }
    pub fn ws(n: usize, k: usize, beta: f64, seed: u64) -> Self {
        GenSpec { family: Family::Ws { k, beta }, n, seed }
    }
    pub fn regular(n: usize, d: usize, seed: u64) -> Self {
        GenSpec { family: Family::Regular { d }, n, seed }
    }
    pub fn tree(n: usize, seed: u64) -> Self {
        GenSpec { family: Family::Tree, n, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        match self.family {
            Family::Er { p } if !(0.0..=1.0).contains(&p) => Err(Error::input(format!("ER p = {p} outside [0, 1]"))),
            Family::Ba { m } if m == 0 || n < m + 1 => {
                Err(Error::input(format!("BA needs m >= 1 and n >= m + 1 (n = {n}, m = {m})")))
            }
            Family::Ws { k, beta } if k % 2 == 1 || k >= n || !(0.0..=1.0).contains(&beta) => Err(Error::input(
                format!("WS needs even k < n and beta in [0, 1] (n = {n}, k = {k}, beta = {beta})"),
            )),
            Family::Regular { d } if d >= n.max(1) || (n * d) % 2 == 1 => {
                Err(Error::input(format!("no simple {d}-regular graph on {n} nodes")))
            }
            _ => Ok(()),
        }
    }
}

/// Draws one graph; a pure function of the spec.
pub fn generate(spec: &GenSpec) -> Result<Graph> {
    spec.validate()?;
    let mut rng = stream_rng(spec.seed, 0x6765_6e);
    let n = spec.n;
    let g = match spec.family {
        Family::Er { p } => erdos_renyi(n, p, &mut rng),
        Family::Ba { m } => barabasi_albert(n, m, &mut rng),
        Family::Ws { k, beta } => watts_strogatz(n, k, beta, &mut rng),
        Family::Regular { d } => random_regular(n, d, &mut rng)?,
        Family::Tree => random_tree(n, &mut rng),
    };
    debug_assert!(g.validate().is_ok());
    Ok(g)
}

fn erdos_renyi(n: usize, p: f64, rng: &mut Rng) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges_unchecked(n, &edges)
}

fn barabasi_albert(n: usize, m: usize, rng: &mut Rng) -> Graph {
    let mut edges: Vec<(usize, usize)> = (0..=m).flat_map(|u| (u + 1..=m).map(move |v| (u, v))).collect();
    // each endpoint appears once per incident edge: sampling from it is degree-proportional
    let mut endpoints: Vec<usize> = edges.iter().flat_map(|&(u, v)| [u, v]).collect();
    for v in m + 1..n {
        let mut targets = BTreeSet::new();
        while targets.len() < m {
            targets.insert(endpoints[rng.random_range(0..endpoints.len())]);
        }
        for &t in &targets {
            edges.push((t, v));
            endpoints.push(t);
            endpoints.push(v);
        }
    }
    Graph::from_edges_unchecked(n, &edges)
}

fn watts_strogatz(n: usize, k: usize, beta: f64, rng: &mut Rng) -> Graph {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for u in 0..n {
        for j in 1..=k / 2 {
            let v = (u + j) % n;
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if !adj[u].contains(&v) || rng.random::<f64>() >= beta {
                continue;
            }
            if adj[u].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n);
                if w != u && !adj[u].contains(&w) {
                    break w;
                }
            };
            adj[u].remove(&v);
            adj[v].remove(&u);
            adj[u].insert(w);
            adj[w].insert(u);
        }
    }
    let edges: Vec<_> = adj
        .iter()
        .enumerate()
        .flat_map(|(u, s)| s.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
        .collect();
    Graph::from_edges_unchecked(n, &edges)
}

const MAX_PAIRING_ATTEMPTS: usize = 100_000;

fn random_regular(n: usize, d: usize, rng: &mut Rng) -> Result<Graph> {
    let mut points: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    'attempt: for _ in 0..MAX_PAIRING_ATTEMPTS {
        points.shuffle(rng);
        let mut seen = BTreeSet::new();
        for pair in points.chunks(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v || !seen.insert((u, v)) {
                continue 'attempt;
            }
        }
        let edges: Vec<_> = seen.into_iter().collect();
        return Ok(Graph::from_edges_unchecked(n, &edges));
    }
    Err(Error::input(format!("pairing model found no simple {d}-regular graph on {n} nodes")))
}

fn random_tree(n: usize, rng: &mut Rng) -> Graph {
    if n <= 1 {
        return Graph::empty(n);
    }
    if n == 2 {
        return Graph::path(2);
    }
    let prufer: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &v in &prufer {
        degree[v] += 1;
    }
    let mut leaves: BTreeSet<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &v in &prufer {
        let leaf = leaves.pop_first().expect("Prüfer decoding always has a leaf");
        edges.push((leaf, v));
        degree[v] -= 1;
        if degree[v] == 1 {
            leaves.insert(v);
        }
    }
    let last: Vec<usize> = leaves.into_iter().collect();
    edges.push((last[0], last[1]));
    Graph::from_edges_unchecked(n, &edges)
}

/// ER training distribution for one problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErDistribution {
    pub min_n: usize,
    pub max_n: usize,
    pub p: f64,
}

impl ErDistribution {
    /// Training distribution of each problem, node range scaled by `scale`
    /// (bounds rounded up).
    pub fn for_problem(problem: Problem, scale: f64) -> Self {
        let (min_n, max_n, p) = match problem {
            Problem::Mvc | Problem::Mis | Problem::Fvs => (80, 100, 0.15),
            Problem::MaxCut => (40, 50, 0.15),
            Problem::MaxClique => (80, 100, 0.5),
        };
        let scaled = |x: usize| ((x as f64 * scale).ceil() as usize).max(1);
        ErDistribution { min_n: scaled(min_n), max_n: scaled(max_n), p }
    }

    pub fn sample(&self, rng: &mut Rng) -> Graph {
        let n = rng.random_range(self.min_n..=self.max_n);
        let seed: u64 = rng.random();
        generate(&GenSpec::er(n, self.p, seed)).expect("valid ER parameters")
    }
}

/// One training graph for `problem` at the given scale.
pub fn sample_training_graph(problem: Problem, scale: f64, rng: &mut Rng) -> Graph {
    ErDistribution::for_problem(problem, scale).sample(rng)
}
