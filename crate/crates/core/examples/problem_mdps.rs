//! Walks each problem's MDP with random actions, turns the action sequence
//! into a certificate, and compares against the exact optimum.

use graphzero::env::{extract_certificate, oracle_optimal, verify_certificate, DEFAULT_ORACLE_CAP};
use graphzero::graph::Graph;
use graphzero::rng::stream_rng;
use graphzero::{Action, Problem};
use rand::Rng;

fn main() -> graphzero::Result<()> {
    let g = Graph::petersen();
    let mut rng = stream_rng(3, 0);
    for problem in Problem::ALL {
        let env = problem.env();
        let mut s = env.init(&g);
        let (mut actions, mut total) = (Vec::new(), 0);
        while !env.is_terminal(&s) {
            let a = Action::from_index(problem, rng.random_range(0..env.num_actions(&s)));
            let (next, r) = env.step(&s, a)?;
            total += r;
            actions.push(a);
            s = next;
        }
        let cert = extract_certificate(problem, &g, &actions)?;
        let best = problem.objective_from_reward(oracle_optimal(problem, &g, DEFAULT_ORACLE_CAP)?);
        println!(
            "{problem:<9} random episode: {:>2} steps, reward {total:>3}, objective {:>2} (valid: {}), optimum {best}",
            actions.len(),
            cert.objective,
            verify_certificate(problem, &g, &cert),
        );
    }
    Ok(())
}
