//! Exact optima by exhaustive enumeration, for validating everything else on
//! small graphs.

use super::{Environment, Problem, State};
use crate::error::{Error, Result};
use crate::graph::{Graph, UnionFind};
use std::collections::HashMap;

pub const DEFAULT_ORACLE_CAP: usize = 14;

/// Optimal cumulative MDP reward `r*(init(g0))`, computed by enumerating all
/// node subsets (or 2-colourings) of the original problem.
pub fn oracle_optimal(problem: Problem, g0: &Graph, cap: usize) -> Result<i64> {
    let n = g0.n();
    if n > cap || n > 30 {
        return Err(Error::input(format!("oracle refuses n = {n} (cap {cap})")));
    }
    let adj = g0.adjacency_masks();
    let full: u64 = if n == 0 { 0 } else { (1u64 << n) - 1 };
    let subsets = 0..=full;
    let members = |s: u64| (0..n).filter(move |&v| s >> v & 1 == 1);
    let best = match problem {
        Problem::Mvc => subsets
            .filter(|&s| members(!s & full).all(|v| adj[v] & !s == 0))
            .map(|s| s.count_ones() as i64)
            .min()
            .map(|k| -k),
        Problem::Mis => subsets
            .filter(|&s| members(s).all(|v| adj[v] & s == 0))
            .map(|s| s.count_ones() as i64)
            .max(),
        Problem::MaxClique => subsets
            .filter(|&s| members(s).all(|v| (s & !(1 << v)) & !adj[v] == 0))
            .map(|s| s.count_ones() as i64)
            .max(),
        Problem::MaxCut => {
            // fixing node n-1 on one side halves the enumeration
            let half = if n == 0 { 0 } else { full >> 1 };
            (0..=half).map(|s| members(s).map(|v| (adj[v] & !s).count_ones() as i64).sum()).max()
        }
        Problem::Fvs => subsets
            .filter(|&s| {
                let mut uf = UnionFind::new(n);
                g0.edges().filter(|&(u, v)| s >> u & 1 == 0 && s >> v & 1 == 0).all(|(u, v)| uf.union(u, v))
            })
            .map(|s| s.count_ones() as i64)
            .min()
            .map(|k| -k),
    };
    Ok(best.expect("the full or empty set is always feasible"))
}

/// Optimal cumulative reward from `s` by memoised search over the MDP itself.
///
/// Within one search every state descends from the same initial graph, so the
/// ascending list of surviving original ids plus the labels identifies it.
pub fn oracle_mdp_optimal(env: &dyn Environment, s: &State) -> i64 {
    let mut memo = HashMap::new();
    search(env, s, &mut memo)
}

type Key = (Vec<usize>, Vec<[u32; 2]>);

fn search(env: &dyn Environment, s: &State, memo: &mut HashMap<Key, i64>) -> i64 {
    if env.is_terminal(s) {
        return 0;
    }
    let key = (s.origin.clone(), s.labels.clone());
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let best = env
        .actions(s)
        .into_iter()
        .map(|a| env.reward(s, a) + search(env, &env.next_state(s, a), memo))
        .max()
        .expect("non-terminal states have actions");
    memo.insert(key, best);
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn both(problem: Problem, g: &Graph) -> (i64, i64) {
        let env = problem.env();
        (oracle_optimal(problem, g, DEFAULT_ORACLE_CAP).unwrap(), oracle_mdp_optimal(env, &env.init(g)))
    }

    #[test]
    fn oracle_values() {
        assert_eq!(oracle_optimal(Problem::Mvc, &Graph::complete(5), 14).unwrap(), -4);
        assert_eq!(oracle_optimal(Problem::MaxCut, &Graph::complete(4), 14).unwrap(), 4);
        assert_eq!(oracle_optimal(Problem::Mis, &Graph::cycle(8), 14).unwrap(), 4);
        assert_eq!(oracle_optimal(Problem::MaxClique, &Graph::cycle(5), 14).unwrap(), 2);
        assert_eq!(oracle_optimal(Problem::Fvs, &Graph::path(6), 14).unwrap(), 0);
        let k3 = Graph::complete(3);
        assert_eq!(oracle_optimal(Problem::Fvs, &k3.disjoint_union(&k3), 14).unwrap(), -2);
    }

    #[test]
    fn oracle_respects_cap() {
        assert!(matches!(oracle_optimal(Problem::Mvc, &Graph::empty(15), 14), Err(Error::Input(_))));
        assert!(oracle_optimal(Problem::Mvc, &Graph::empty(15), 15).is_ok());
    }

    #[test]
    fn mdp_oracle_examples() {
        assert_eq!(both(Problem::Mvc, &Graph::complete(3)), (-2, -2));
        assert_eq!(both(Problem::MaxCut, &Graph::complete(3)), (2, 2));
        assert_eq!(both(Problem::MaxClique, &Graph::cycle(5)), (2, 2));
        assert_eq!(both(Problem::Mis, &Graph::path(4)), (2, 2));
        assert_eq!(both(Problem::Mis, &Graph::empty(3)), (3, 3));
        assert_eq!(both(Problem::MaxClique, &Graph::complete(4)), (4, 4));
        let k3 = Graph::complete(3);
        assert_eq!(both(Problem::Fvs, &k3.disjoint_union(&k3)), (-2, -2));
        assert_eq!(both(Problem::Fvs, &Graph::path(4)), (0, 0));
        assert_eq!(both(Problem::MaxClique, &Graph::petersen().disjoint_union(&Graph::path(2))), (2, 2));
    }

    #[test]
    fn reduction_sound_on_small_catalog() {
        for n in 0..=5 {
            for g in crate::graph::graph_catalog(n) {
                for p in Problem::ALL {
                    let (a, b) = both(p, &g);
                    assert_eq!(a, b, "{p} on {:?}", g.edges().collect::<Vec<_>>());
                }
            }
        }
    }
}
