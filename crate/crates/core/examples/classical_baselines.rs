//! Randomized baselines against the exact optimum, plus the feedback vertex
//! set reduction rules on a small multigraph.

use graphzero::baselines::{best_of, fvs_kernelize, Baseline};
use graphzero::env::{oracle_optimal, DEFAULT_ORACLE_CAP};
use graphzero::generators::{generate, GenSpec};
use graphzero::graph::MultiGraph;

fn main() -> graphzero::Result<()> {
    let g = generate(&GenSpec::er(12, 0.3, 4))?;
    for baseline in [Baseline::MvcRandomized, Baseline::MisRandomized, Baseline::FvsRandomized] {
        let problem = baseline.problem();
        let once = best_of(baseline, &g, 1, 9)?;
        let many = best_of(baseline, &g, 100, 9)?;
        let best = problem.objective_from_reward(oracle_optimal(problem, &g, DEFAULT_ORACLE_CAP)?);
        println!("{baseline:<16} one run {:>2}  best of 100 {:>2} (run {:>2})  optimum {best}", once.objective, many.objective, many.best_run);
    }

    // a triangle with a pendant path and a doubled edge
    let mut mg = MultiGraph::from_edges(6, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (4, 5)]);
    let forced = fvs_kernelize(&mut mg);
    println!("\nkernelization forced {forced:?}; {} nodes and {} edges remain", mg.node_count(), mg.edge_count());
    Ok(())
}
