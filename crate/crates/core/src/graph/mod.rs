//! Simple undirected graphs and the mutation primitives the environments use.
//!
//! Graph values are immutable once built; every mutation returns a fresh graph
//! with nodes renumbered densely (ascending by old id) together with the map
//! from new ids back to the ids of the input graph.

mod catalog;
mod io;
mod multigraph;

pub use catalog::{canonical_form, connected_catalog, graph_catalog, CanonicalForm};
pub use io::{parse_edge_list, parse_edge_list_lenient, serialize_edge_list};
pub use multigraph::MultiGraph;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Undirected graph without self-loops or parallel edges.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    m: usize,
}

/// Renumbering produced by a node-deleting operation: `map[new] = old`.
pub type IdMap = Vec<usize>;

impl Graph {
    /// `n` isolated nodes.
    pub fn empty(n: usize) -> Self {
        Graph { adj: vec![Vec::new(); n], m: 0 }
    }

    /// Builds a graph, rejecting self-loops, duplicate edges and bad ids.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::input(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(Error::input(format!("self-loop at node {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for (u, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::input(format!("duplicate edge at node {u}")));
            }
        }
        Ok(Graph { adj, m: edges.len() })
    }

    /// Builds a graph from edges assumed valid; panics otherwise. Used by
    /// generators and tests where validity holds by construction.
    pub fn from_edges_unchecked(n: usize, edges: &[(usize, usize)]) -> Self {
        Self::from_edges(n, edges).expect("invalid edge list")
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        Self::from_edges_unchecked(n, &edges)
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        Self::from_edges_unchecked(n, &edges)
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycle needs at least 3 nodes");
        let edges: Vec<_> = (0..n).map(|v| (v, (v + 1) % n)).collect();
        Self::from_edges_unchecked(n, &edges)
    }

    /// Star with center 0 and `leaves` leaves.
    pub fn star(leaves: usize) -> Self {
        let edges: Vec<_> = (1..=leaves).map(|v| (0, v)).collect();
        Self::from_edges_unchecked(leaves + 1, &edges)
    }

    pub fn petersen() -> Self {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((i, i + 5));
            edges.push((i + 5, (i + 2) % 5 + 5));
        }
        Self::from_edges_unchecked(10, &edges)
    }

    /// Disjoint union, nodes of `other` shifted by `self.n()`.
    pub fn disjoint_union(&self, other: &Graph) -> Graph {
        let off = self.n();
        let mut edges: Vec<_> = self.edges().collect();
        edges.extend(other.edges().map(|(u, v)| (u + off, v + off)));
        Self::from_edges_unchecked(off + other.n(), &edges)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.adj.len()
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Checks every structural invariant; returns a description of the first violation.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let mut total = 0;
        for (u, list) in self.adj.iter().enumerate() {
            total += list.len();
            for w in list.windows(2) {
                if w[0] >= w[1] {
                    return Err(format!("adjacency of {u} not strictly ascending"));
                }
            }
            for &v in list {
                if v >= self.n() {
                    return Err(format!("neighbor {v} of {u} out of range"));
                }
                if v == u {
                    return Err(format!("self-loop at {u}"));
                }
                if self.adj[v].binary_search(&u).is_err() {
                    return Err(format!("edge ({u}, {v}) not symmetric"));
                }
            }
        }
        if total != 2 * self.m {
            return Err(format!("m = {} but adjacency sums to {total}", self.m));
        }
        Ok(())
    }

    fn check_node(&self, x: usize) -> Result<()> {
        if x >= self.n() {
            return Err(Error::input(format!("node {x} out of range for n = {}", self.n())));
        }
        Ok(())
    }

    /// Induced subgraph on `keep`; new ids are dense and ascending by old id.
    pub fn induced_subgraph(&self, keep: &NodeSet) -> Result<(Graph, IdMap)> {
        if let Some(&bad) = keep.iter().find(|&&v| v >= self.n()) {
            return Err(Error::input(format!("node {bad} out of range for n = {}", self.n())));
        }
        let mut mask = vec![false; self.n()];
        for &v in keep.iter() {
            mask[v] = true;
        }
        Ok(self.induced_by_mask(&mask))
    }

    /// Induced subgraph on the nodes with `mask[v] == true`.
    pub fn induced_by_mask(&self, mask: &[bool]) -> (Graph, IdMap) {
        let mut new_id = vec![usize::MAX; self.n()];
        let mut map = Vec::new();
        for v in 0..self.n() {
            if mask[v] {
                new_id[v] = map.len();
                map.push(v);
            }
        }
        let mut m2 = 0;
        let adj: Vec<Vec<usize>> = map
            .iter()
            .map(|&old| {
                let list: Vec<usize> = self.adj[old]
                    .iter()
                    .filter(|&&u| mask[u])
                    .map(|&u| new_id[u])
                    .collect();
                m2 += list.len();
                list
            })
            .collect();
        (Graph { adj, m: m2 / 2 }, map)
    }

    /// Removes `x` and all its neighbors.
    pub fn delete_closed_neighborhood(&self, x: usize) -> Result<(Graph, IdMap)> {
        self.check_node(x)?;
        let mut mask = vec![true; self.n()];
        mask[x] = false;
        for &u in self.neighbors(x) {
            mask[u] = false;
        }
        Ok(self.induced_by_mask(&mask))
    }

    /// Removes `x`, then every node left with degree zero.
    pub fn delete_node_drop_isolated(&self, x: usize) -> Result<(Graph, IdMap)> {
        self.check_node(x)?;
        let mask: Vec<bool> = (0..self.n())
            .map(|v| {
                if v == x {
                    return false;
                }
                let deg = self.degree(v) - usize::from(self.has_edge(v, x));
                deg > 0
            })
            .collect();
        Ok(self.induced_by_mask(&mask))
    }

    /// Removes `x` only.
    pub fn delete_node(&self, x: usize) -> Result<(Graph, IdMap)> {
        self.check_node(x)?;
        let mut mask = vec![true; self.n()];
        mask[x] = false;
        Ok(self.induced_by_mask(&mask))
    }

    pub fn component_count(&self) -> usize {
        let mut uf = UnionFind::new(self.n());
        let mut comps = self.n();
        for (u, v) in self.edges() {
            if uf.union(u, v) {
                comps -= 1;
            }
        }
        comps
    }

    /// True iff the graph is a forest (the empty graph included).
    pub fn is_acyclic(&self) -> bool {
        let mut uf = UnionFind::new(self.n());
        self.edges().all(|(u, v)| uf.union(u, v))
    }

    pub fn is_connected(&self) -> bool {
        self.n() <= 1 || self.component_count() == 1
    }

    /// Applies the node relabeling `perm[old] = new`.
    pub fn permute(&self, perm: &[usize]) -> Graph {
        assert_eq!(perm.len(), self.n());
        let edges: Vec<_> = self.edges().map(|(u, v)| (perm[u], perm[v])).collect();
        Self::from_edges_unchecked(self.n(), &edges)
    }

    /// Adjacency rows as bitmasks; only valid for `n <= 64`.
    pub fn adjacency_masks(&self) -> Vec<u64> {
        assert!(self.n() <= 64, "bitmask view needs n <= 64");
        self.adj
            .iter()
            .map(|list| list.iter().fold(0u64, |acc, &v| acc | (1 << v)))
            .collect()
    }

    /// Compressed sparse row view `(offsets, targets)`.
    pub fn csr(&self) -> (Vec<usize>, Vec<usize>) {
        let mut offsets = Vec::with_capacity(self.n() + 1);
        let mut targets = Vec::with_capacity(2 * self.m);
        offsets.push(0);
        for list in &self.adj {
            targets.extend_from_slice(list);
            offsets.push(targets.len());
        }
        (offsets, targets)
    }
}

/// A set of node ids, kept sorted and duplicate-free.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeSet(Vec<usize>);

impl NodeSet {
    pub fn new(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        NodeSet(members)
    }

    pub fn all(n: usize) -> Self {
        NodeSet((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// True iff every member is a valid id for a graph on `n` nodes.
    pub fn fits(&self, n: usize) -> bool {
        self.0.last().is_none_or(|&v| v < n)
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        NodeSet::new(iter.into_iter().collect())
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), rank: vec![0; n] }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the classes of `a` and `b`; false if they were already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}
