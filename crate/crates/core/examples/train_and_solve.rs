//! Trains a small vertex-cover network by self-play, then compares its greedy
//! and search solutions with the optimum on held-out graphs.
//!
//! `cargo run --release --example train_and_solve -- [rounds]`

use graphzero::env::{oracle_optimal, DEFAULT_ORACLE_CAP};
use graphzero::generators::{generate, ErDistribution, GenSpec};
use graphzero::gnn::ModelKind;
use graphzero::solve::{solve, Mode, SolveOptions};
use graphzero::training::{train, TrainConfig};
use graphzero::Problem;

fn main() -> graphzero::Result<()> {
    let rounds = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(45);
    let problem = Problem::Mvc;
    let mut cfg = TrainConfig::new(problem, ModelKind::Gin);
    cfg.seed = 1;
    cfg.max_rounds = rounds;
    cfg.distribution = Some(ErDistribution { min_n: 15, max_n: 25, p: 0.3 });
    let out = train(&cfg)?;
    for e in out.metrics.iter().filter(|e| e.event == "evaluation") {
        println!("tick {:>4}: {}", e.tick, e.payload);
    }
    println!("best model version {} after {} rounds\n", out.version, out.rounds);

    let (mut greedy_sum, mut mcts_sum, mut opt_sum) = (0, 0, 0);
    for i in 0..10 {
        let g = generate(&GenSpec::er(12, 0.3, 1000 + i))?;
        let greedy = solve(problem, &g, &out.best, &SolveOptions::new(Mode::Greedy))?;
        let mcts = solve(problem, &g, &out.best, &SolveOptions { seed: i, ..SolveOptions::new(Mode::Mcts) })?;
        let opt = problem.objective_from_reward(oracle_optimal(problem, &g, DEFAULT_ORACLE_CAP)?);
        println!("instance {i}: greedy {:>2}  search {:>2}  optimum {opt:>2}", greedy.objective, mcts.objective);
        greedy_sum += greedy.objective;
        mcts_sum += mcts.objective;
        opt_sum += opt;
    }
    println!(
        "\nratio to optimum: greedy {:.3}, search {:.3}",
        greedy_sum as f64 / opt_sum as f64,
        mcts_sum as f64 / opt_sum as f64
    );
    Ok(())
}
