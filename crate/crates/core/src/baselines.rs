//! Classical randomized comparators: degree-1 reduction for vertex cover and
//! independent set, and the kernelize-then-sample parameterized algorithm
//! for feedback vertex set.

use crate::env::{Certificate, Problem};
use crate::error::{Error, Result};
use crate::graph::{Graph, MultiGraph, NodeSet};
use crate::rng::{stream_rng, Rng};
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BaselineResult {
    pub objective: i64,
    pub certificate: Certificate,
    pub runs: usize,
    pub best_run: usize,
}

impl BaselineResult {
    fn single(certificate: Certificate) -> Self {
        BaselineResult { objective: certificate.objective, certificate, runs: 1, best_run: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Baseline {
    MvcRandomized,
    MisRandomized,
    FvsRandomized,
}

impl Baseline {
    pub fn for_problem(problem: Problem) -> Result<Self> {
        match problem {
            Problem::Mvc => Ok(Baseline::MvcRandomized),
            Problem::Mis => Ok(Baseline::MisRandomized),
            Problem::Fvs => Ok(Baseline::FvsRandomized),
            p => Err(Error::input(format!("no randomized baseline for {p}"))),
        }
    }

    pub fn problem(self) -> Problem {
        match self {
            Baseline::MvcRandomized => Problem::Mvc,
            Baseline::MisRandomized => Problem::Mis,
            Baseline::FvsRandomized => Problem::Fvs,
        }
    }

    pub fn run(self, g: &Graph, rng: &mut Rng) -> BaselineResult {
        match self {
            Baseline::MvcRandomized => mvc_randomized(g, rng),
            Baseline::MisRandomized => mis_randomized(g, rng),
            Baseline::FvsRandomized => fvs_randomized(g, rng),
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(&format!("{}-randomized", self.problem()))
    }
}

impl FromStr for Baseline {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let problem = s.strip_suffix("-randomized").unwrap_or(s);
        Baseline::for_problem(problem.parse()?)
    }
}

/// Simple graph with node deletion and live degrees.
struct Residual<'g> {
    g: &'g Graph,
    alive: Vec<bool>,
    deg: Vec<usize>,
    edges: usize,
}

impl<'g> Residual<'g> {
    fn new(g: &'g Graph) -> Self {
        Residual { g, alive: vec![true; g.n()], deg: (0..g.n()).map(|v| g.degree(v)).collect(), edges: g.m() }
    }

    fn remove(&mut self, v: usize) {
        if !self.alive[v] {
            return;
        }
        self.alive[v] = false;
        for &u in self.g.neighbors(v) {
            if self.alive[u] {
                self.deg[u] -= 1;
                self.edges -= 1;
            }
        }
    }

    fn live_neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.g.neighbors(v).iter().copied().filter(|&u| self.alive[u])
    }

    fn pick(&self, rng: &mut Rng, pred: impl Fn(usize) -> bool) -> Option<usize> {
        let pool: Vec<usize> = (0..self.g.n()).filter(|&v| self.alive[v] && pred(v)).collect();
        (!pool.is_empty()).then(|| pool[rng.random_range(0..pool.len())])
    }

    /// Uniform edge: endpoint with probability `deg/2m`, then a uniform live neighbour.
    fn random_edge(&self, rng: &mut Rng) -> (usize, usize) {
        let mut target = rng.random_range(0..2 * self.edges);
        let u = (0..self.g.n())
            .find(|&v| {
                if !self.alive[v] {
                    return false;
                }
                if target < self.deg[v] {
                    return true;
                }
                target -= self.deg[v];
                false
            })
            .expect("edge count matches degrees");
        let nbrs: Vec<usize> = self.live_neighbors(u).collect();
        (u, nbrs[rng.random_range(0..nbrs.len())])
    }
}

/// One run of randomized vertex cover: while edges remain, a degree-1
/// vertex sends its neighbour into the cover; otherwise both endpoints of a
/// uniformly random edge join. The result is a cover of size at most twice
/// the optimum (the edge steps form a matching).
pub fn mvc_randomized(g: &Graph, rng: &mut Rng) -> BaselineResult {
    let mut res = Residual::new(g);
    let mut cover = Vec::new();
    while res.edges > 0 {
        if let Some(v) = res.pick(rng, |v| res.deg[v] == 1) {
            let u = res.live_neighbors(v).next().unwrap();
            cover.push(u);
            res.remove(u);
            res.remove(v);
        } else {
            let (u, v) = res.random_edge(rng);
            cover.extend([u, v]);
            res.remove(u);
            res.remove(v);
        }
    }
    BaselineResult::single(Certificate::from_nodes(Problem::Mvc, g, NodeSet::new(cover)))
}

/// The printed pseudocode taken literally: the fallback branch picks a
/// random vertex, deletes it with its neighbours and counts one. This does
/// **not** yield vertex covers (a triangle scores 1) and exists only for
/// comparison; the returned value is the counter `r`.
pub fn mvc_literal(g: &Graph, rng: &mut Rng) -> i64 {
    let mut res = Residual::new(g);
    let mut r = 0;
    while res.alive.iter().any(|&a| a) {
        let v = match res.pick(rng, |v| res.deg[v] == 1) {
            Some(v) => v,
            None => res.pick(rng, |_| true).unwrap(),
        };
        let nbrs: Vec<usize> = res.live_neighbors(v).collect();
        res.remove(v);
        for u in nbrs {
            res.remove(u);
        }
        r += 1;
    }
    r
}

/// One run of randomized independent set: a vertex of degree at most one
/// joins if one exists, else a uniformly random vertex; its closed
/// neighbourhood is deleted. Always returns a maximal independent set.
pub fn mis_randomized(g: &Graph, rng: &mut Rng) -> BaselineResult {
    let mut res = Residual::new(g);
    let mut set = Vec::new();
    loop {
        let Some(v) = res.pick(rng, |v| res.deg[v] <= 1).or_else(|| res.pick(rng, |_| true)) else { break };
        set.push(v);
        let nbrs: Vec<usize> = res.live_neighbors(v).collect();
        res.remove(v);
        for u in nbrs {
            res.remove(u);
        }
    }
    BaselineResult::single(Certificate::from_nodes(Problem::Mis, g, NodeSet::new(set)))
}

/// Applies the four feedback-vertex-set reduction rules until none fires:
/// (1) a self-loop forces its vertex into the solution, (2) multiplicities
/// above two drop to two, (3) a degree-2 vertex is smoothed away by joining
/// its neighbours, (4) vertices of degree at most one are deleted.
///
/// Returns the vertices forced into the solution by rule 1. Node ids are
/// stable, so they are ids of the source graph; smoothed vertices never
/// enter the solution.
pub fn fvs_kernelize(mg: &mut MultiGraph) -> Vec<usize> {
    let mut forced = Vec::new();
    let mut work: Vec<usize> = mg.nodes().collect();
    work.reverse();
    while let Some(v) = work.pop() {
        if !mg.is_alive(v) {
            continue;
        }
        let nbrs: Vec<(usize, usize)> = mg.incident(v).filter(|&(u, _)| u != v).collect();
        if mg.has_self_loop(v) {
            forced.push(v);
            mg.remove_node(v);
            work.extend(nbrs.iter().map(|&(u, _)| u));
            continue;
        }
        for &(u, k) in &nbrs {
            if k > 2 {
                mg.set_multiplicity(v, u, 2);
                work.push(u);
            }
        }
        match mg.degree(v) {
            0 | 1 => {
                mg.remove_node(v);
                work.extend(nbrs.iter().map(|&(u, _)| u));
            }
            2 => {
                let ends: Vec<usize> = mg.incident(v).flat_map(|(u, k)| std::iter::repeat_n(u, k.min(2))).collect();
                mg.remove_node(v);
                mg.add_edge(ends[0], ends[1]);
                work.extend([ends[0], ends[1]]);
            }
            _ => {}
        }
    }
    forced
}

/// Picks a live vertex with probability proportional to its degree
/// (multiplicity-weighted, self-loops count twice). `None` without edges.
pub fn sample_degree_proportional(mg: &MultiGraph, rng: &mut Rng) -> Option<usize> {
    let total: usize = mg.nodes().map(|v| mg.degree(v)).sum();
    if total == 0 {
        return None;
    }
    let mut target = rng.random_range(0..total);
    for v in mg.nodes() {
        let d = mg.degree(v);
        if target < d {
            return Some(v);
        }
        target -= d;
    }
    unreachable!("target below total degree")
}

/// One run of the randomized parameterized feedback vertex set algorithm:
/// kernelize, and while anything is left (the kernel has minimum degree
/// three, hence a cycle) delete a degree-proportional random vertex into the
/// solution.
pub fn fvs_randomized(g: &Graph, rng: &mut Rng) -> BaselineResult {
    let mut mg = MultiGraph::from_graph(g);
    let mut solution = Vec::new();
    loop {
        solution.extend(fvs_kernelize(&mut mg));
        let Some(v) = sample_degree_proportional(&mg, rng) else { break };
        solution.push(v);
        mg.remove_node(v);
    }
    BaselineResult::single(Certificate::from_nodes(Problem::Fvs, g, NodeSet::new(solution)))
}

/// Best of `runs` independently seeded runs (run `i` uses stream `i` of
/// `seed`); ties go to the earliest run.
pub fn best_of(baseline: Baseline, g: &Graph, runs: usize, seed: u64) -> Result<BaselineResult> {
    if runs == 0 {
        return Err(Error::input("runs must be at least 1"));
    }
    let problem = baseline.problem();
    let results: Vec<BaselineResult> =
        (0..runs).into_par_iter().map(|i| baseline.run(g, &mut stream_rng(seed, i as u64))).collect();
    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if problem.better(r.objective as f64, results[best].objective as f64) {
            best = i;
        }
    }
    let mut out = results.into_iter().nth(best).unwrap();
    out.runs = runs;
    out.best_run = best;
    Ok(out)
}
