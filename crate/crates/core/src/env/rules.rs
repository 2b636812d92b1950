use super::{Action, Environment, Problem, State};
use crate::graph::{Graph, NodeSet};

/// Minimum vertex cover: picking `x` removes its edges, then isolated nodes; reward −1.
#[derive(Clone, Copy, Debug, Default)]
pub struct MvcEnv;

/// Max cut: colour `x` with `c`, bump the `c`-th counter of each neighbour,
/// delete `x`; reward is the opposite counter of `x`.
#[derive(Clone, Copy, Debug, Default)]
pub struct MaxCutEnv;

/// Maximum clique: move to the subgraph induced by `N(x)`; reward +1.
#[derive(Clone, Copy, Debug, Default)]
pub struct MaxCliqueEnv;

/// Maximum independent set: delete `x` and its neighbours; reward +1.
#[derive(Clone, Copy, Debug, Default)]
pub struct MisEnv;

/// Minimum feedback vertex set: vertex-cover transitions, terminal once acyclic.
#[derive(Clone, Copy, Debug, Default)]
pub struct FvsEnv;

/// Drops isolated nodes; they can never be needed in a cover.
fn without_isolated(g: &Graph) -> State {
    let mask: Vec<bool> = (0..g.n()).map(|v| g.degree(v) > 0).collect();
    let (h, map) = g.induced_by_mask(&mask);
    State::new(g.clone()).restrict(h, &map)
}

impl Environment for MvcEnv {
    fn problem(&self) -> Problem {
        Problem::Mvc
    }

    fn init(&self, g: &Graph) -> State {
        without_isolated(g)
    }

    fn is_terminal(&self, s: &State) -> bool {
        s.n() == 0
    }

    fn reward(&self, _s: &State, _a: Action) -> i64 {
        -1
    }

    fn next_state(&self, s: &State, a: Action) -> State {
        let (g, map) = s.graph.delete_node_drop_isolated(a.node).expect("checked action");
        s.restrict(g, &map)
    }
}

impl Environment for FvsEnv {
    fn problem(&self) -> Problem {
        Problem::Fvs
    }

    fn init(&self, g: &Graph) -> State {
        State::new(g.clone())
    }

    fn is_terminal(&self, s: &State) -> bool {
        s.graph.is_acyclic()
    }

    fn reward(&self, _s: &State, _a: Action) -> i64 {
        -1
    }

    fn next_state(&self, s: &State, a: Action) -> State {
        MvcEnv.next_state(s, a)
    }
}

impl Environment for MaxCutEnv {
    fn problem(&self) -> Problem {
        Problem::MaxCut
    }

    fn init(&self, g: &Graph) -> State {
        State::new(g.clone())
    }

    fn is_terminal(&self, s: &State) -> bool {
        s.n() == 0
    }

    fn reward(&self, s: &State, a: Action) -> i64 {
        let c = a.color.expect("max-cut action carries a colour") as usize;
        s.labels[a.node][2 - c] as i64
    }

    fn next_state(&self, s: &State, a: Action) -> State {
        let c = a.color.expect("max-cut action carries a colour") as usize;
        let mut labels = s.labels.clone();
        for &u in s.graph.neighbors(a.node) {
            labels[u][c - 1] += 1;
        }
        let (g, map) = s.graph.delete_node(a.node).expect("checked action");
        State {
            graph: std::sync::Arc::new(g),
            labels: map.iter().map(|&old| labels[old]).collect(),
            origin: map.iter().map(|&old| s.origin[old]).collect(),
        }
    }
}

impl Environment for MaxCliqueEnv {
    fn problem(&self) -> Problem {
        Problem::MaxClique
    }

    fn init(&self, g: &Graph) -> State {
        State::new(g.clone())
    }

    fn is_terminal(&self, s: &State) -> bool {
        s.n() == 0
    }

    fn reward(&self, _s: &State, _a: Action) -> i64 {
        1
    }

    fn next_state(&self, s: &State, a: Action) -> State {
        let keep = NodeSet::new(s.graph.neighbors(a.node).to_vec());
        let (g, map) = s.graph.induced_subgraph(&keep).expect("neighbours are valid ids");
        s.restrict(g, &map)
    }
}

impl Environment for MisEnv {
    fn problem(&self) -> Problem {
        Problem::Mis
    }

    fn init(&self, g: &Graph) -> State {
        State::new(g.clone())
    }

    fn is_terminal(&self, s: &State) -> bool {
        s.n() == 0
    }

    fn reward(&self, _s: &State, _a: Action) -> i64 {
        1
    }

    fn next_state(&self, s: &State, a: Action) -> State {
        let (g, map) = s.graph.delete_closed_neighborhood(a.node).expect("checked action");
        s.restrict(g, &map)
    }
}

/// Wraps an environment and multiplies every reward by a positive integer.
pub struct ScaledRewards<'a> {
    pub inner: &'a dyn Environment,
    pub factor: i64,
}

impl Environment for ScaledRewards<'_> {
    fn problem(&self) -> Problem {
        self.inner.problem()
    }
    fn init(&self, g: &Graph) -> State {
        self.inner.init(g)
    }
    fn is_terminal(&self, s: &State) -> bool {
        self.inner.is_terminal(s)
    }
    fn reward(&self, s: &State, a: Action) -> i64 {
        self.factor * self.inner.reward(s, a)
    }
    fn next_state(&self, s: &State, a: Action) -> State {
        self.inner.next_state(s, a)
    }
}
