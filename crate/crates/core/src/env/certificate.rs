use super::{Action, Environment, Problem};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeSet};
use serde::{Deserialize, Serialize};

/// Explicit solution on the original graph: a node set, or a 2-colouring for max cut.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub problem: Problem,
    pub objective: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<NodeSet>,
    /// Colour (1 or 2) of every original node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub colors: Option<Vec<u8>>,
}

impl Certificate {
    pub fn from_nodes(problem: Problem, g0: &Graph, nodes: NodeSet) -> Self {
        debug_assert!(nodes.fits(g0.n()));
        let objective = nodes.len() as i64;
        Certificate { problem, objective, nodes: Some(nodes), colors: None }
    }

    pub fn from_colors(g0: &Graph, colors: Vec<u8>) -> Self {
        let objective = cut_size(g0, &colors) as i64;
        Certificate { problem: Problem::MaxCut, objective, nodes: None, colors: Some(colors) }
    }
}

pub(crate) fn cut_size(g: &Graph, colors: &[u8]) -> usize {
    g.edges().filter(|&(u, v)| colors[u] != colors[v]).count()
}

/// Replays `actions` from `init(g0)` and maps the picks back to original ids.
///
/// Fails with a contract violation if an action is invalid or the replay
/// does not end in a terminal state.
pub fn extract_certificate(problem: Problem, g0: &Graph, actions: &[Action]) -> Result<Certificate> {
    let env = problem.env();
    let mut s = env.init(g0);
    let mut picked = Vec::new();
    let mut colors = vec![0u8; g0.n()];
    for &a in actions {
        env.check_action(&s, a)?;
        let orig = s.origin[a.node];
        match a.color {
            Some(c) => colors[orig] = c,
            None => picked.push(orig),
        }
        s = env.next_state(&s, a);
    }
    if !env.is_terminal(&s) {
        return Err(Error::contract("trajectory does not reach a terminal state"));
    }
    Ok(if problem == Problem::MaxCut {
        Certificate::from_colors(g0, colors)
    } else {
        Certificate::from_nodes(problem, g0, NodeSet::new(picked))
    })
}

/// Checks the defining property of the solution on `g0` and its claimed objective.
pub fn verify_certificate(problem: Problem, g0: &Graph, cert: &Certificate) -> bool {
    if cert.problem != problem {
        return false;
    }
    if problem == Problem::MaxCut {
        let Some(colors) = &cert.colors else { return false };
        return colors.len() == g0.n()
            && colors.iter().all(|&c| c == 1 || c == 2)
            && cut_size(g0, colors) as i64 == cert.objective;
    }
    let Some(nodes) = &cert.nodes else { return false };
    if !nodes.fits(g0.n()) || nodes.len() as i64 != cert.objective {
        return false;
    }
    match problem {
        Problem::Mvc => g0.edges().all(|(u, v)| nodes.contains(u) || nodes.contains(v)),
        Problem::Mis => g0.edges().all(|(u, v)| !(nodes.contains(u) && nodes.contains(v))),
        Problem::MaxClique => {
            let s = nodes.as_slice();
            s.iter().enumerate().all(|(i, &u)| s[i + 1..].iter().all(|&v| g0.has_edge(u, v)))
        }
        Problem::Fvs => {
            let mask: Vec<bool> = (0..g0.n()).map(|v| !nodes.contains(v)).collect();
            g0.induced_by_mask(&mask).0.is_acyclic()
        }
        Problem::MaxCut => unreachable!(),
    }
}

/// Sum of rewards of an action sequence from `init(g0)`.
pub fn replay_reward(env: &dyn Environment, g0: &Graph, actions: &[Action]) -> Result<i64> {
    let mut s = env.init(g0);
    let mut total = 0;
    for &a in actions {
        let (next, r) = env.step(&s, a)?;
        total += r;
        s = next;
    }
    Ok(total)
}
