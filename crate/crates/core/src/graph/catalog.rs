//! Canonical labeling and exhaustive catalogs of small graphs.
//!
//! The canonical form is computed by colour refinement followed by an
//! individualisation search that keeps the lexicographically smallest
//! adjacency matrix among all discrete leaves. Exact for any size, but the
//! search is exponential on highly symmetric inputs, so it is meant for the
//! small graphs used by the oracles and test sweeps (n <= 12 or so).

use super::Graph;
use std::collections::BTreeSet;

/// Isomorphism-invariant key of a (vertex-coloured) graph.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalForm {
    pub n: usize,
    /// Vertex colours in canonical order.
    pub colors: Vec<u64>,
    /// Adjacency rows in canonical order, as bitmasks.
    pub rows: Vec<u64>,
}

impl CanonicalForm {
    pub fn to_graph(&self) -> Graph {
        let mut edges = Vec::new();
        for (u, &row) in self.rows.iter().enumerate() {
            for v in u + 1..self.n {
                if row >> v & 1 == 1 {
                    edges.push((u, v));
                }
            }
        }
        Graph::from_edges_unchecked(self.n, &edges)
    }
}

/// Canonical form of `g`, optionally with vertex colours that must be preserved.
pub fn canonical_form(g: &Graph, colors: Option<&[u64]>) -> CanonicalForm {
    let n = g.n();
    assert!(n <= 64, "canonical form supports n <= 64");
    let colors: Vec<u64> = colors.map(|c| c.to_vec()).unwrap_or_else(|| vec![0; n]);
    assert_eq!(colors.len(), n);
    let masks = g.adjacency_masks();

    let distinct: BTreeSet<u64> = colors.iter().copied().collect();
    let cells: Vec<Vec<usize>> = distinct
        .iter()
        .map(|&c| (0..n).filter(|&v| colors[v] == c).collect())
        .collect();
    let mut best: Option<(Vec<u64>, Vec<u64>)> = None;
    search(refine(cells, &masks), &masks, &colors, &mut best);
    let (colors, rows) = best.unwrap_or_default();
    CanonicalForm { n, colors, rows }
}

fn refine(mut cells: Vec<Vec<usize>>, masks: &[u64]) -> Vec<Vec<usize>> {
    loop {
        let cell_masks: Vec<u64> = cells.iter().map(|c| c.iter().fold(0, |a, &v| a | 1 << v)).collect();
        let mut next = Vec::with_capacity(cells.len());
        for cell in &cells {
            if cell.len() == 1 {
                next.push(cell.clone());
                continue;
            }
            let sig = |v: usize| -> Vec<u32> { cell_masks.iter().map(|&cm| (masks[v] & cm).count_ones()).collect() };
            let mut keyed: Vec<(Vec<u32>, usize)> = cell.iter().map(|&v| (sig(v), v)).collect();
            keyed.sort();
            let mut start = 0;
            for i in 1..=keyed.len() {
                if i == keyed.len() || keyed[i].0 != keyed[start].0 {
                    next.push(keyed[start..i].iter().map(|&(_, v)| v).collect());
                    start = i;
                }
            }
        }
        let changed = next.len() != cells.len();
        cells = next;
        if !changed {
            return cells;
        }
    }
}

fn search(cells: Vec<Vec<usize>>, masks: &[u64], colors: &[u64], best: &mut Option<(Vec<u64>, Vec<u64>)>) {
    let Some(target) = cells.iter().position(|c| c.len() > 1) else {
        let order: Vec<usize> = cells.iter().map(|c| c[0]).collect();
        let mut pos = vec![0; order.len()];
        for (i, &v) in order.iter().enumerate() {
            pos[v] = i;
        }
        let rows: Vec<u64> = order
            .iter()
            .map(|&v| {
                let mut r = 0u64;
                let mut m = masks[v];
                while m != 0 {
                    let u = m.trailing_zeros() as usize;
                    r |= 1 << pos[u];
                    m &= m - 1;
                }
                r
            })
            .collect();
        let cols: Vec<u64> = order.iter().map(|&v| colors[v]).collect();
        let cand = (cols, rows);
        if best.as_ref().is_none_or(|b| cand < *b) {
            *best = Some(cand);
        }
        return;
    };
    for &v in &cells[target] {
        let mut next = Vec::with_capacity(cells.len() + 1);
        next.extend_from_slice(&cells[..target]);
        next.push(vec![v]);
        next.push(cells[target].iter().copied().filter(|&u| u != v).collect());
        next.extend_from_slice(&cells[target + 1..]);
        search(refine(next, masks), masks, colors, best);
    }
}

/// All graphs on `n` nodes up to isomorphism, in canonical order.
pub fn graph_catalog(n: usize) -> Vec<Graph> {
    let mut level: BTreeSet<CanonicalForm> = BTreeSet::new();
    level.insert(canonical_form(&Graph::empty(0), None));
    for k in 1..=n {
        let mut next = BTreeSet::new();
        for form in &level {
            let base = form.to_graph();
            let base_edges: Vec<_> = base.edges().collect();
            for subset in 0u64..(1 << (k - 1)) {
                let mut edges = base_edges.clone();
                edges.extend((0..k - 1).filter(|&u| subset >> u & 1 == 1).map(|u| (u, k - 1)));
                let g = Graph::from_edges_unchecked(k, &edges);
                next.insert(canonical_form(&g, None));
            }
        }
        level = next;
    }
    level.iter().map(CanonicalForm::to_graph).collect()
}

/// Connected graphs on `n` nodes up to isomorphism.
pub fn connected_catalog(n: usize) -> Vec<Graph> {
    graph_catalog(n).into_iter().filter(Graph::is_connected).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_sizes_match_known_counts() {
        // OEIS A000088 and A001349
        let all = [1, 1, 2, 4, 11, 34, 156];
        let connected = [1, 1, 1, 2, 6, 21, 112];
        for n in 0..=6 {
            assert_eq!(graph_catalog(n).len(), all[n], "all graphs n = {n}");
            assert_eq!(connected_catalog(n).len(), connected[n], "connected n = {n}");
        }
    }

    #[test]
    fn canonical_form_is_permutation_invariant() {
        let g = Graph::petersen();
        let perm = [3, 7, 1, 0, 9, 2, 5, 8, 4, 6];
        assert_eq!(canonical_form(&g, None), canonical_form(&g.permute(&perm), None));
        let c5 = Graph::cycle(5);
        let p5 = Graph::path(5);
        assert_ne!(canonical_form(&c5, None), canonical_form(&p5, None));
    }

    #[test]
    fn colours_distinguish() {
        let g = Graph::path(3);
        let a = canonical_form(&g, Some(&[1, 0, 0]));
        let b = canonical_form(&g, Some(&[0, 0, 1]));
        let c = canonical_form(&g, Some(&[0, 1, 0]));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
