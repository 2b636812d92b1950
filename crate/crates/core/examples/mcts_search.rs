//! Test-time search with an uninformed network (uniform prior, zero value):
//! the random-playout normalisation alone steers the tree to good moves.

use graphzero::env::{oracle_optimal, DEFAULT_ORACLE_CAP};
use graphzero::generators::{generate, GenSpec};
use graphzero::gnn::UniformStub;
use graphzero::mcts::MctsConfig;
use graphzero::solve::{solve, solve_greedy, Mode, SolveOptions};
use graphzero::Problem;

fn main() -> graphzero::Result<()> {
    let g = generate(&GenSpec::er(10, 0.35, 11))?;
    println!("graph: n={} m={}", g.n(), g.m());
    for problem in Problem::ALL {
        let greedy = solve_greedy(problem, &g, &UniformStub)?;
        let mut opts = SolveOptions::new(Mode::Mcts);
        opts.mcts = MctsConfig { c_iter: 50.0, tau: 0.0, ..MctsConfig::default() };
        opts.seed = 1;
        let mcts = solve(problem, &g, &UniformStub, &opts)?;
        let best = problem.objective_from_reward(oracle_optimal(problem, &g, DEFAULT_ORACLE_CAP)?);
        println!(
            "{problem:<9} uniform greedy {:>2}  search {:>2}  optimum {best:>2}  ({:.0} ms)",
            greedy.objective, mcts.objective, mcts.wall_ms
        );
    }
    Ok(())
}
