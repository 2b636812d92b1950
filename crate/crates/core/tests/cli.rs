//! End-to-end runs of the command-line binary.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphzero")).args(args).output().expect("spawn binary")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_then_solve_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    let o = run(&["generate-graph", "--family", "er", "--n", "9", "--p", "0.4", "--seed", "3", "--out", p(&g)]);
    assert_eq!(o.status.code(), Some(0));

    let o = run(&["solve", "--problem", "mvc", "--graph", p(&g), "--stub", "--mode", "mcts", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["problem"], "mvc");
    assert_eq!(report["objective"], report["certificate"]["objective"]);

    let o = run(&["trace", "--problem", "maxcut", "--graph", p(&g), "--stub"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    // header + one line per node + objective line
    assert_eq!(text.lines().count(), 9 + 2);
}

#[test]
fn generated_graphs_are_reproducible() {
    let a = run(&["generate-graph", "--family", "ba", "--n", "15", "--m", "2", "--seed", "8"]);
    let b = run(&["generate-graph", "--family", "ba", "--n", "15", "--m", "2", "--seed", "8"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("15 27\n"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    std::fs::write(&g, "3 2\n0 1\n1 2\n").unwrap();
    // missing file, malformed graph, bad flag values: input errors
    assert_eq!(run(&["solve", "--problem", "mvc", "--graph", "/nonexistent", "--stub"]).status.code(), Some(2));
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "3 1\n0 7\n").unwrap();
    assert_eq!(run(&["solve", "--problem", "mvc", "--graph", p(&bad), "--stub"]).status.code(), Some(2));
    assert_eq!(run(&["solve", "--problem", "tsp", "--graph", p(&g), "--stub"]).status.code(), Some(2));
    assert_eq!(
        run(&["solve", "--problem", "mvc", "--graph", p(&g), "--stub", "--mode", "mcts", "--c-iter", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["baseline", "--problem", "maxcut", "--graph", p(&g)]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["solve", "--problem", "mvc", "--graph", p(&g), "--stub"]).status.code(), Some(0));
}

#[test]
fn baseline_and_literal_variant() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    // a star: the cover is the centre
    std::fs::write(&g, "5 4\n0 1\n0 2\n0 3\n0 4\n").unwrap();
    let o = run(&["baseline", "--problem", "mvc", "--graph", p(&g), "--runs", "5", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["objective"], 1);
    let o = run(&["baseline", "--problem", "mvc", "--graph", p(&g), "--literal"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("not a vertex cover"));
    assert_eq!(run(&["baseline", "--problem", "fvs", "--graph", p(&g), "--literal"]).status.code(), Some(2));
}

#[test]
fn config_file_supplies_flags_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    std::fs::write(&g, "4 3\n0 1\n1 2\n2 3\n").unwrap();
    let kv = dir.path().join("run.conf");
    std::fs::write(&kv, format!("problem = mis\ngraph = {}\nstub = true\n[solve]\nmode = mcts\n", g.display())).unwrap();
    let o = run(&["solve", "--config", p(&kv), "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!((r["problem"].as_str(), r["mode"].as_str()), (Some("mis"), Some("mcts")));

    let o = run(&["solve", "--config", p(&kv), "--json", "--problem", "mvc", "--mode", "greedy"]);
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!((r["problem"].as_str(), r["mode"].as_str()), (Some("mvc"), Some("greedy")));

    let js = dir.path().join("run.json");
    std::fs::write(&js, format!(r#"{{"problem": "mvc", "graph": "{}", "solve": {{"stub": true}}}}"#, g.display())).unwrap();
    let o = run(&["solve", "--config", p(&js)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    // succeeding without --model-file shows the nested stub = true was applied
    assert!(stdout(&o).starts_with("mvc objective "));

    let unknown = dir.path().join("bad.conf");
    std::fs::write(&unknown, "colour = blue\n").unwrap();
    assert_eq!(run(&["solve", "--config", p(&unknown), "--problem", "mvc", "--graph", p(&g), "--stub"]).status.code(), Some(2));
}

#[test]
fn train_then_evaluate_with_the_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.gzck");
    let metrics = dir.path().join("metrics.jsonl");
    let o = run(&[
        "train", "--problem", "mvc", "--model", "gcn", "--rounds", "3", "--rounds-per-candidate", "3", "--eval-instances", "3",
        "--episodes-per-round", "1", "--min-n", "6", "--max-n", "8", "--p", "0.3", "--c-iter", "1", "--rollouts", "4",
        "--out", p(&model), "--metrics", p(&metrics), "--checkpoint-dir", p(&dir.path().join("ck")), "--seed", "5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(model.exists() && dir.path().join("ck/best.gzck").exists());
    let log = std::fs::read_to_string(&metrics).unwrap();
    assert!(log.lines().all(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()));
    assert!(log.contains("\"evaluation\""));

    let args = [
        "evaluate", "--problem", "mvc", "--er-count", "4", "--er-n", "8", "--model-file", p(&model), "--modes",
        "greedy,mcts", "--baseline", "--oracle", "--seed", "2", "--json",
    ];
    let a = run(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, run(&args).stdout);
    let table: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(table["solvers"].as_array().unwrap().len(), 4);
    assert_eq!(table["rows"].as_array().unwrap().len(), 4);

    // a checkpoint of the wrong kind or problem is refused
    let g = dir.path().join("g.txt");
    std::fs::write(&g, "2 1\n0 1\n").unwrap();
    let kind = run(&["solve", "--problem", "mvc", "--graph", p(&g), "--model-file", p(&model), "--kind", "gin"]);
    assert_eq!(kind.status.code(), Some(2));
    let problem = run(&["solve", "--problem", "maxcut", "--graph", p(&g), "--model-file", p(&model)]);
    assert_eq!(problem.status.code(), Some(2));
    let ok = run(&["solve", "--problem", "mvc", "--graph", p(&g), "--model-file", p(&model), "--model-file", p(&model), "--kind", "gcn"]);
    assert_eq!(ok.status.code(), Some(0));
}
