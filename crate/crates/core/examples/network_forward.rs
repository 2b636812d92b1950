//! Builds every backbone, runs it on a state, takes a gradient step on a toy
//! example and round-trips the weights through a checkpoint file.

use graphzero::generators::{generate, GenSpec};
use graphzero::gnn::{load_params_as, loss_and_gradients, save_params, Example, ModelKind, Params, PolicyValue};
use graphzero::{Action, Problem};

fn main() -> graphzero::Result<()> {
    let problem = Problem::MaxCut;
    let env = problem.env();
    let g = generate(&GenSpec::er(8, 0.4, 5))?;
    // two moves in, so the colour counters are not all zero
    let s0 = env.init(&g);
    let s1 = env.next_state(&s0, Action::colored(0, 1));
    let s = env.next_state(&s1, Action::colored(0, 2));
    let dir = std::env::temp_dir();
    for kind in ModelKind::ALL {
        let params = Params::for_problem(kind, problem, 1)?;
        let out = params.evaluate(env, &s)?;
        let k = out.p.len();
        // target: put all mass on action 0 with value 1
        let mut pi = vec![0.0; k];
        pi[0] = 1.0;
        let batch = [Example { state: &s, action: 0, pi: &pi, z: 1.0 }];
        let g = loss_and_gradients(&params, env, &batch, 1e-4)?;
        let grad_norm = g.grads.iter().map(|x| x * x).sum::<f64>().sqrt();

        let path = dir.join(format!("graphzero-example-{kind}.gzck"));
        save_params(&params, &path)?;
        let back = load_params_as(&path, kind)?;
        std::fs::remove_file(&path)?;
        println!(
            "{kind:<6} {:>6} weights | {k} actions, p[0] = {:.4}, v[0] = {:+.4} | loss {:.4}, |grad| {grad_norm:.3} | checkpoint ok: {}",
            params.weights.len(),
            out.p[0],
            out.v[0],
            g.loss,
            back == params
        );
    }
    Ok(())
}
