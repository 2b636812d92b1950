//! Plain-text edge lists: a `<n> <m>` header, then `m` lines of `<u> <v>`
//! with 0-based ids. Lines starting with `#` and blank lines are skipped.

use super::Graph;
use crate::error::{Error, Result};
use std::collections::BTreeSet;
use std::fmt::Write as _;

/// Strict parse: self-loops and duplicate edges are errors.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    parse(text, false)
}

/// Lenient parse: self-loops and duplicate edges are dropped.
pub fn parse_edge_list_lenient(text: &str) -> Result<Graph> {
    parse(text, true)
}

fn parse(text: &str, lenient: bool) -> Result<Graph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or(Error::Parse { line: 0, msg: "missing header".into() })?;
    let (n, m) = pair(hline, header, "header")?;

    let mut seen = BTreeSet::new();
    let mut edges = Vec::with_capacity(m);
    let mut count = 0;
    for (line, l) in lines {
        count += 1;
        let (u, v) = pair(line, l, "edge")?;
        if u >= n || v >= n {
            return Err(Error::Parse { line, msg: format!("node id out of range for n = {n}") });
        }
        if u == v {
            if lenient {
                continue;
            }
            return Err(Error::Parse { line, msg: format!("self-loop at node {u}") });
        }
        if !seen.insert((u.min(v), u.max(v))) {
            if lenient {
                continue;
            }
            return Err(Error::Parse { line, msg: format!("duplicate edge ({u}, {v})") });
        }
        edges.push((u, v));
    }
    if count != m {
        return Err(Error::Parse { line: hline, msg: format!("header declares {m} edges, found {count}") });
    }
    Graph::from_edges(n, &edges)
}

fn pair(line: usize, l: &str, what: &str) -> Result<(usize, usize)> {
    let toks: Vec<&str> = l.split_whitespace().collect();
    if toks.len() != 2 {
        return Err(Error::Parse { line, msg: format!("{what} needs exactly 2 tokens, got {}", toks.len()) });
    }
    let num = |t: &str| {
        t.parse::<usize>()
            .map_err(|_| Error::Parse { line, msg: format!("not a non-negative integer: {t:?}") })
    };
    Ok((num(toks[0])?, num(toks[1])?))
}

/// Canonical text form: header, then edges `u v` with `u < v` in sorted order.
pub fn serialize_edge_list(g: &Graph) -> String {
    let mut out = String::new();
    writeln!(out, "{} {}", g.n(), g.m()).unwrap();
    for (u, v) in g.edges() {
        writeln!(out, "{u} {v}").unwrap();
    }
    out
}
