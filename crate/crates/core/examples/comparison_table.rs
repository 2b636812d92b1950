//! A comparison table over a few instances: uninformed network (greedy and
//! search), randomized baseline and exact optimum.

use graphzero::baselines::Baseline;
use graphzero::generators::{generate, GenSpec};
use graphzero::mcts::MctsConfig;
use graphzero::solve::{evaluate, Instance, Mode, SolverSpec};
use graphzero::Problem;

fn main() -> graphzero::Result<()> {
    let instances = vec![
        Instance { name: "er-12".into(), graph: generate(&GenSpec::er(12, 0.3, 1))? },
        Instance { name: "ba-12".into(), graph: generate(&GenSpec::ba(12, 2, 1))? },
        Instance { name: "ws-12".into(), graph: generate(&GenSpec::ws(12, 4, 0.2, 1))? },
    ];
    let solvers = vec![
        SolverSpec::Stub { mode: Mode::Greedy },
        SolverSpec::Stub { mode: Mode::Mcts },
        SolverSpec::Baseline { baseline: Baseline::MisRandomized, runs: 50 },
        SolverSpec::Oracle { cap: 14 },
    ];
    let mcts = MctsConfig { c_iter: 10.0, tau: 0.0, ..MctsConfig::default() };
    let table = evaluate(Problem::Mis, &instances, &solvers, &mcts, 42)?;
    print!("{}", table.to_text());
    Ok(())
}
