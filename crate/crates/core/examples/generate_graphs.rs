//! Draws one graph from each seeded family and prints its size and edge list
//! header. The same spec always yields the same graph.

use graphzero::generators::{generate, GenSpec};
use graphzero::graph::serialize_edge_list;

fn main() -> graphzero::Result<()> {
    let specs = [
        ("erdos-renyi", GenSpec::er(20, 0.2, 7)),
        ("barabasi-albert", GenSpec::ba(20, 2, 7)),
        ("watts-strogatz", GenSpec::ws(20, 4, 0.1, 7)),
        ("3-regular", GenSpec::regular(20, 3, 7)),
        ("tree", GenSpec::tree(20, 7)),
    ];
    for (name, spec) in specs {
        let g = generate(&spec)?;
        assert_eq!(g, generate(&spec)?);
        let degrees: Vec<usize> = (0..g.n()).map(|v| g.degree(v)).collect();
        println!(
            "{name:<16} n={:>2} m={:>3} max degree {:>2} components {}",
            g.n(),
            g.m(),
            degrees.iter().max().unwrap(),
            g.component_count()
        );
    }
    let tree = generate(&GenSpec::tree(6, 1))?;
    println!("\nedge list of a 6-node tree:\n{}", serialize_edge_list(&tree));
    Ok(())
}
