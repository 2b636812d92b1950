use super::{Graph, UnionFind};
use std::collections::BTreeMap;

/// Undirected multigraph with self-loops, used by the feedback vertex set
/// kernelization. Node ids are stable: deleting a node leaves a hole instead
/// of renumbering, so ids always refer to the source graph.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MultiGraph {
    /// `adj[u][v]` is the multiplicity of edge `{u, v}`; a self-loop sits at `adj[u][u]`.
    adj: Vec<BTreeMap<usize, usize>>,
    alive: Vec<bool>,
}

impl MultiGraph {
    pub fn new(n: usize) -> Self {
        MultiGraph { adj: vec![BTreeMap::new(); n], alive: vec![true; n] }
    }

    pub fn from_graph(g: &Graph) -> Self {
        let mut mg = Self::new(g.n());
        for (u, v) in g.edges() {
            mg.add_edge(u, v);
        }
        mg
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut mg = Self::new(n);
        for &(u, v) in edges {
            mg.add_edge(u, v);
        }
        mg
    }

    /// Node-id capacity, including deleted nodes.
    pub fn capacity(&self) -> usize {
        self.adj.len()
    }

    pub fn is_alive(&self, v: usize) -> bool {
        self.alive[v]
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.adj.len()).filter(|&v| self.alive[v])
    }

    pub fn node_count(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        assert!(self.alive[u] && self.alive[v], "edge on deleted node");
        *self.adj[u].entry(v).or_insert(0) += 1;
        if u != v {
            *self.adj[v].entry(u).or_insert(0) += 1;
        }
    }

    pub fn multiplicity(&self, u: usize, v: usize) -> usize {
        self.adj[u].get(&v).copied().unwrap_or(0)
    }

    pub fn set_multiplicity(&mut self, u: usize, v: usize, k: usize) {
        for (a, b) in [(u, v), (v, u)] {
            if k == 0 {
                self.adj[a].remove(&b);
            } else {
                self.adj[a].insert(b, k);
            }
        }
    }

    /// Degree counting multiplicity; a self-loop contributes 2.
    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].iter().map(|(&u, &k)| if u == v { 2 * k } else { k }).sum()
    }

    /// Distinct neighbors with multiplicities (self-loop included as `(v, k)`).
    pub fn incident(&self, v: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj[v].iter().map(|(&u, &k)| (u, k))
    }

    pub fn has_self_loop(&self, v: usize) -> bool {
        self.multiplicity(v, v) > 0
    }

    /// Deletes `v` and all incident edges.
    pub fn remove_node(&mut self, v: usize) {
        let nbrs: Vec<usize> = self.adj[v].keys().copied().collect();
        for u in nbrs {
            self.adj[u].remove(&v);
        }
        self.adj[v].clear();
        self.alive[v] = false;
    }

    /// Edge multiset as `(u, v, multiplicity)` with `u <= v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, m)| m.iter().filter(move |(&v, _)| v >= u).map(move |(&v, &k)| (u, v, k)))
    }

    pub fn edge_count(&self) -> usize {
        self.edges().map(|(_, _, k)| k).sum()
    }

    /// A multigraph is acyclic iff it has no self-loop, no parallel edge and
    /// its underlying simple graph is a forest.
    pub fn is_acyclic(&self) -> bool {
        let mut uf = UnionFind::new(self.adj.len());
        self.edges().all(|(u, v, k)| u != v && k == 1 && uf.union(u, v))
    }
}
