//! Solving instances with a trained network (greedy policy or test-time
//! search), per-step traces, and comparison tables across solvers.

use crate::baselines::{best_of, Baseline};
use crate::env::{extract_certificate, oracle_optimal, verify_certificate, Action, Certificate, Environment, Problem};
use crate::error::{Error, Result};
use crate::gnn::{Params, PolicyValue, UniformStub};
use crate::graph::Graph;
use crate::mcts::{estimate_random_stats, MctsConfig, SearchTree};
use crate::rng::{mix_seed, stream_rng};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Greedy,
    Mcts,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(Mode::Greedy),
            "mcts" => Ok(Mode::Mcts),
            _ => Err(Error::input(format!("unknown mode {s:?} (expected greedy or mcts)"))),
        }
    }
}

/// One move of a solved episode.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepLog {
    pub step: usize,
    pub nodes: usize,
    pub edges: usize,
    /// Node id in the current state.
    pub node: usize,
    /// The same node in the input graph.
    pub original_node: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub color: Option<u8>,
    pub reward: i64,
    /// Entropy of the network policy at this state.
    pub entropy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub problem: Problem,
    pub mode: Mode,
    pub objective: i64,
    pub certificate: Certificate,
    pub steps: Vec<StepLog>,
    pub wall_ms: f64,
    pub config: Value,
    /// Which ensemble member produced the result (0 without an ensemble).
    pub model_index: usize,
}

fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

/// Policy-argmax episode from `Init(g0)`; ties go to the lowest index.
pub fn greedy_actions(env: &dyn Environment, g0: &Graph, net: &dyn PolicyValue) -> Result<Vec<Action>> {
    let mut s = env.init(g0);
    let mut actions = Vec::new();
    while !env.is_terminal(&s) {
        let out = net.evaluate(env, &s)?;
        let mut best = 0;
        for (i, &p) in out.p.iter().enumerate() {
            if p > out.p[best] {
                best = i;
            }
        }
        let a = Action::from_index(env.problem(), best);
        s = env.next_state(&s, a);
        actions.push(a);
    }
    Ok(actions)
}

/// Options shared by the solving entry points.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub mode: Mode,
    pub mcts: MctsConfig,
    pub seed: u64,
    /// Compute playout statistics for every step even in greedy mode.
    pub trace_stats: bool,
}

impl SolveOptions {
    /// Test-time defaults: `c_iter = 4`, `τ = 0`, root noise on.
    pub fn new(mode: Mode) -> Self {
        SolveOptions { mode, mcts: MctsConfig { c_iter: 4.0, tau: 0.0, ..Default::default() }, seed: 0, trace_stats: false }
    }
}

/// Solves `g0` and returns a report whose certificate has been verified.
pub fn solve(problem: Problem, g0: &Graph, net: &dyn PolicyValue, opts: &SolveOptions) -> Result<RunReport> {
    let env = problem.env();
    let start = Instant::now();
    let mut rng = stream_rng(opts.seed, 0x736f_6c76);
    let mut steps = Vec::new();
    let mut actions = Vec::new();
    let mut tree = match opts.mode {
        Mode::Mcts => Some(SearchTree::new(env, env.init(g0), opts.mcts.clone())?),
        Mode::Greedy => None,
    };
    let mut s = env.init(g0);
    while !env.is_terminal(&s) {
        let out = net.evaluate(env, &s)?;
        let (a, stats) = match &mut tree {
            Some(tree) => {
                let pi = tree.search(net, &mut rng)?;
                let a = pi.iter().position(|&p| p == pi.iter().copied().fold(0.0, f64::max)).unwrap();
                (a, tree.root_stats())
            }
            None => {
                let mut best = 0;
                for (i, &p) in out.p.iter().enumerate() {
                    if p > out.p[best] {
                        best = i;
                    }
                }
                let stats = opts.trace_stats.then(|| estimate_random_stats(env, &s, opts.mcts.rollouts, &mut rng));
                (best, stats)
            }
        };
        let action = Action::from_index(problem, a);
        let (next, reward) = env.step(&s, action)?;
        steps.push(StepLog {
            step: steps.len(),
            nodes: s.n(),
            edges: s.graph.m(),
            node: action.node,
            original_node: s.origin[action.node],
            color: action.color,
            reward,
            entropy: entropy(&out.p),
            mu: stats.map(|st| st.mu),
            sigma: stats.map(|st| st.sigma),
        });
        actions.push(action);
        if let Some(tree) = &mut tree {
            tree.advance(a, &mut rng)?;
        }
        s = next;
    }
    let certificate = extract_certificate(problem, g0, &actions)?;
    if !verify_certificate(problem, g0, &certificate) {
        return Err(Error::contract("solver produced an invalid certificate"));
    }
    let total: i64 = steps.iter().map(|st| st.reward).sum();
    if problem.objective_from_reward(total) != certificate.objective {
        return Err(Error::contract("objective disagrees with certificate"));
    }
    let config = match opts.mode {
        Mode::Greedy => serde_json::json!({"mode": "greedy"}),
        Mode::Mcts => serde_json::json!({
            "mode": "mcts", "c_puct": opts.mcts.c_puct, "c_iter": opts.mcts.c_iter, "tau": opts.mcts.tau,
            "noise": opts.mcts.noise, "rollouts": opts.mcts.rollouts, "seed": opts.seed,
        }),
    };
    Ok(RunReport {
        problem,
        mode: opts.mode,
        objective: certificate.objective,
        certificate,
        steps,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        config,
        model_index: 0,
    })
}

pub fn solve_greedy(problem: Problem, g0: &Graph, net: &dyn PolicyValue) -> Result<RunReport> {
    solve(problem, g0, net, &SolveOptions::new(Mode::Greedy))
}

pub fn solve_mcts(problem: Problem, g0: &Graph, net: &dyn PolicyValue, mcts: &MctsConfig, seed: u64) -> Result<RunReport> {
    solve(problem, g0, net, &SolveOptions { mode: Mode::Mcts, mcts: mcts.clone(), seed, trace_stats: false })
}

/// Runs every model and keeps the best objective (earliest model on ties).
pub fn solve_ensemble(problem: Problem, g0: &Graph, models: &[Arc<Params>], opts: &SolveOptions) -> Result<RunReport> {
    if models.is_empty() {
        return Err(Error::input("empty model ensemble"));
    }
    let mut best: Option<RunReport> = None;
    for (i, m) in models.iter().enumerate() {
        let mut r = solve(problem, g0, m.as_ref(), opts)?;
        r.model_index = i;
        if best.as_ref().is_none_or(|b| problem.better(r.objective as f64, b.objective as f64)) {
            best = Some(r);
        }
    }
    Ok(best.unwrap())
}

/// A named input graph.
#[derive(Clone, Debug)]
pub struct Instance {
    pub name: String,
    pub graph: Graph,
}

/// One column of a comparison table.
#[derive(Clone)]
pub enum SolverSpec {
    Network { label: String, models: Vec<Arc<Params>>, mode: Mode },
    Stub { mode: Mode },
    Baseline { baseline: Baseline, runs: usize },
    Oracle { cap: usize },
}

impl SolverSpec {
    pub fn label(&self) -> String {
        match self {
            SolverSpec::Network { label, mode, models } if models.len() > 1 => {
                format!("{label}[best-of-{}]/{}", models.len(), mode_name(*mode))
            }
            SolverSpec::Network { label, mode, .. } => format!("{label}/{}", mode_name(*mode)),
            SolverSpec::Stub { mode } => format!("uniform/{}", mode_name(*mode)),
            SolverSpec::Baseline { baseline, runs } => format!("{baseline}[{runs}]"),
            SolverSpec::Oracle { .. } => "oracle".into(),
        }
    }
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Greedy => "greedy",
        Mode::Mcts => "mcts",
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableRow {
    pub name: String,
    pub nodes: usize,
    pub edges: usize,
    pub objectives: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalTable {
    pub problem: Problem,
    pub solvers: Vec<String>,
    pub rows: Vec<TableRow>,
    /// Solvers left out, with the reason.
    pub omitted: Vec<String>,
}

impl EvalTable {
    /// Aligned plain-text rendering.
    pub fn to_text(&self) -> String {
        let mut header = vec!["instance".to_string(), "|V|".into(), "|E|".into()];
        header.extend(self.solvers.iter().cloned());
        let mut rows: Vec<Vec<String>> = vec![header];
        for r in &self.rows {
            let mut cells = vec![r.name.clone(), r.nodes.to_string(), r.edges.to_string()];
            cells.extend(r.objectives.iter().map(|o| o.to_string()));
            rows.push(cells);
        }
        let widths: Vec<usize> = (0..rows[0].len()).map(|c| rows.iter().map(|r| r[c].len()).max().unwrap()).collect();
        let mut out = String::new();
        writeln!(out, "# {}", self.problem).unwrap();
        for (i, r) in rows.iter().enumerate() {
            let line: Vec<String> = r
                .iter()
                .enumerate()
                .map(|(c, s)| if c == 0 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
                .collect();
            writeln!(out, "{}", line.join("  ").trim_end()).unwrap();
            if i == 0 {
                writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1))).unwrap();
            }
        }
        for o in &self.omitted {
            writeln!(out, "# omitted: {o}").unwrap();
        }
        out
    }
}

/// Runs every solver on every instance. Deterministic given `seed`: each
/// (instance, solver) cell draws from its own random stream.
pub fn evaluate(problem: Problem, instances: &[Instance], solvers: &[SolverSpec], mcts: &MctsConfig, seed: u64) -> Result<EvalTable> {
    let mut omitted = Vec::new();
    let active: Vec<&SolverSpec> = solvers
        .iter()
        .filter(|s| match s {
            SolverSpec::Oracle { cap } if instances.iter().any(|i| i.graph.n() > *cap) => {
                omitted.push(format!("oracle (an instance exceeds {cap} nodes)"));
                false
            }
            SolverSpec::Baseline { baseline, .. } if baseline.problem() != problem => {
                omitted.push(format!("{} (different problem)", s.label()));
                false
            }
            _ => true,
        })
        .collect();
    let rows: Vec<TableRow> = instances
        .par_iter()
        .enumerate()
        .map(|(ii, inst)| {
            let objectives = active
                .iter()
                .enumerate()
                .map(|(si, spec)| {
                    let cell_seed = mix_seed(&[seed, ii as u64, si as u64]);
                    let opts = |mode| SolveOptions { mode, mcts: mcts.clone(), seed: cell_seed, trace_stats: false };
                    Ok(match spec {
                        SolverSpec::Network { models, mode, .. } => {
                            solve_ensemble(problem, &inst.graph, models, &opts(*mode))?.objective
                        }
                        SolverSpec::Stub { mode } => solve(problem, &inst.graph, &UniformStub, &opts(*mode))?.objective,
                        SolverSpec::Baseline { baseline, runs } => {
                            let r = best_of(*baseline, &inst.graph, *runs, cell_seed)?;
                            if !verify_certificate(problem, &inst.graph, &r.certificate) {
                                return Err(Error::contract("baseline produced an invalid certificate"));
                            }
                            r.objective
                        }
                        SolverSpec::Oracle { cap } => problem.objective_from_reward(oracle_optimal(problem, &inst.graph, *cap)?),
                    })
                })
                .collect::<Result<Vec<i64>>>()?;
            Ok(TableRow { name: inst.name.clone(), nodes: inst.graph.n(), edges: inst.graph.m(), objectives })
        })
        .collect::<Result<_>>()?;
    Ok(EvalTable { problem, solvers: active.iter().map(|s| s.label()).collect(), rows, omitted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, GenSpec};
    use crate::gnn::ModelKind;

    #[test]
    fn uniform_stub_examples() {
        let r = solve_greedy(Problem::MaxClique, &Graph::complete(4), &UniformStub).unwrap();
        assert_eq!(r.objective, 4);
        let tree = generate(&GenSpec::tree(9, 2)).unwrap();
        let r = solve_greedy(Problem::Fvs, &tree, &UniformStub).unwrap();
        assert_eq!((r.objective, r.steps.len()), (0, 0));
        let r = solve_mcts(Problem::Mvc, &Graph::complete(3), &UniformStub, &SolveOptions::new(Mode::Mcts).mcts, 1).unwrap();
        assert_eq!(r.objective, 2);
        assert!(solve_mcts(Problem::Mvc, &Graph::complete(3), &UniformStub, &MctsConfig { c_iter: 0.0, ..Default::default() }, 1)
            .is_err());
    }

    #[test]
    fn trace_records_every_step() {
        let g = generate(&GenSpec::er(10, 0.3, 1)).unwrap();
        let mut opts = SolveOptions::new(Mode::Greedy);
        opts.trace_stats = true;
        let r = solve(Problem::MaxCut, &g, &UniformStub, &opts).unwrap();
        assert!(r.steps.len() <= g.n());
        assert!(r.steps.iter().all(|s| s.mu.is_some() && s.sigma.unwrap() > 0.0));
        assert!((r.steps[0].entropy - (20f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn evaluate_is_deterministic_and_drops_oracle_on_large_instances() {
        let problem = Problem::Mvc;
        let small: Vec<Instance> = (0..3)
            .map(|i| Instance { name: format!("er{i}"), graph: generate(&GenSpec::er(9, 0.3, i)).unwrap() })
            .collect();
        let model = Arc::new(Params::for_problem(ModelKind::Gcn, problem, 1).unwrap());
        let solvers = vec![
            SolverSpec::Network { label: "gcn".into(), models: vec![model.clone(), model], mode: Mode::Mcts },
            SolverSpec::Stub { mode: Mode::Greedy },
            SolverSpec::Baseline { baseline: Baseline::MvcRandomized, runs: 10 },
            SolverSpec::Oracle { cap: 14 },
        ];
        let cfg = SolveOptions::new(Mode::Mcts).mcts;
        let a = evaluate(problem, &small, &solvers, &cfg, 3).unwrap();
        let b = evaluate(problem, &small, &solvers, &cfg, 3).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        assert_eq!(a.solvers.len(), 4);
        for row in &a.rows {
            assert!(row.objectives[..3].iter().all(|&o| o >= row.objectives[3]));
        }
        let mut big = small.clone();
        big.push(Instance { name: "big".into(), graph: generate(&GenSpec::er(20, 0.2, 0)).unwrap() });
        let t = evaluate(problem, &big, &solvers, &cfg, 3).unwrap();
        assert_eq!(t.solvers.len(), 3);
        assert_eq!(t.omitted.len(), 1);
    }
}
