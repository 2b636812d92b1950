//! Command-line front end.
//!
//! Every flag can also come from a config file given with `--config`: either
//! `key = value` lines (with optional `[subcommand]` sections) or a JSON
//! object (optionally nesting per-subcommand objects). Keys are flag names
//! without the leading dashes; underscores and dashes are interchangeable.
//! Flags on the command line always win over the file.

use crate::baselines::{best_of, mvc_literal, Baseline};
use crate::env::{verify_certificate, Problem, DEFAULT_ORACLE_CAP};
use crate::error::{Error, Result};
use crate::generators::{generate, ErDistribution, Family, GenSpec};
use crate::gnn::{load_params, load_params_as, save_params, ModelKind, Params, UniformStub};
use crate::graph::{parse_edge_list, serialize_edge_list, Graph};
use crate::mcts::MctsConfig;
use crate::rng::{mix_seed, stream_rng};
use crate::solve::{evaluate, solve, solve_ensemble, Instance, Mode, RunReport, SolveOptions, SolverSpec};
use crate::training::{train, TrainConfig};
use clap::{Args, CommandFactory, Parser, Subcommand};
use serde_json::{json, Value};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

#[derive(Parser, Debug)]
#[command(name = "graphzero", version, about = "Self-play MCTS + GNN solver for NP-hard graph problems")]
pub struct Cli {
    /// Config file (key=value or JSON) supplying defaults for any flag.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a policy/value network by self-play.
    Train(TrainArgs),
    /// Solve one instance with a network (or the uniform stub).
    Solve(SolveArgs),
    /// Compare solvers over a set of instances.
    Evaluate(EvaluateArgs),
    /// Run a randomized classical baseline.
    Baseline(BaselineArgs),
    /// Write random graphs as edge lists.
    GenerateGraph(GenerateArgs),
    /// Per-step dump of a solve: state size, action, policy entropy, μ, σ.
    Trace(SolveArgs),
}

#[derive(Args, Debug, Clone)]
pub struct MctsArgs {
    #[arg(long)]
    pub c_puct: Option<f64>,
    /// Search budget coefficient: iterate until root visits exceed c_iter·|A|.
    #[arg(long)]
    pub c_iter: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Random playouts per expanded node for μ and σ.
    #[arg(long)]
    pub rollouts: Option<usize>,
    #[arg(long)]
    pub dirichlet_alpha: Option<f64>,
    #[arg(long)]
    pub dirichlet_eps: Option<f64>,
    /// Disable root Dirichlet noise.
    #[arg(long)]
    pub no_noise: bool,
}

impl MctsArgs {
    fn apply(&self, mut c: MctsConfig) -> Result<MctsConfig> {
        if let Some(v) = self.c_puct {
            c.c_puct = v;
        }
        if let Some(v) = self.c_iter {
            c.c_iter = v;
        }
        if let Some(v) = self.tau {
            c.tau = v;
        }
        if let Some(v) = self.rollouts {
            c.rollouts = v;
        }
        if let Some(v) = self.dirichlet_alpha {
            c.dirichlet_alpha = v;
        }
        if let Some(v) = self.dirichlet_eps {
            c.dirichlet_eps = v;
        }
        if self.no_noise {
            c.noise = false;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub problem: Problem,
    /// Backbone: s2v, gcn, gin or ign2p.
    #[arg(long, default_value = "gin")]
    pub model: ModelKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Learner rounds to run.
    #[arg(long, default_value_t = 150)]
    pub rounds: u64,
    /// Wall-clock budget in minutes.
    #[arg(long)]
    pub max_minutes: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub trajectories_per_round: Option<usize>,
    #[arg(long)]
    pub rounds_per_candidate: Option<usize>,
    #[arg(long)]
    pub eval_instances: Option<usize>,
    #[arg(long)]
    pub episodes_per_round: Option<usize>,
    /// Scale of the problem's default training sizes.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Custom ER training distribution (all three required together).
    #[arg(long, requires_all = ["max_n", "p"])]
    pub min_n: Option<usize>,
    #[arg(long, requires_all = ["min_n", "p"])]
    pub max_n: Option<usize>,
    #[arg(long, requires_all = ["min_n", "max_n"])]
    pub p: Option<f64>,
    /// Run generators, learners and evaluators on threads.
    #[arg(long)]
    pub threaded: bool,
    #[arg(long)]
    pub generators: Option<usize>,
    #[arg(long)]
    pub learners: Option<usize>,
    #[arg(long)]
    pub evaluators: Option<usize>,
    #[arg(long)]
    pub checkpoint_dir: Option<PathBuf>,
    /// JSON-lines metrics log.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// Where to write the final best model.
    #[arg(long, default_value = "model.gzck")]
    pub out: PathBuf,
    #[command(flatten)]
    pub mcts: MctsArgs,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long)]
    pub problem: Problem,
    /// Edge-list file.
    #[arg(long)]
    pub graph: PathBuf,
    /// Model checkpoint; repeat for a best-of ensemble.
    #[arg(long = "model-file", value_name = "FILE")]
    pub model_files: Vec<PathBuf>,
    /// Expected backbone of the checkpoint(s); a mismatch is an error.
    #[arg(long)]
    pub kind: Option<ModelKind>,
    /// Use the uniform-prior, zero-value stub instead of a model.
    #[arg(long, conflicts_with = "model_files")]
    pub stub: bool,
    #[arg(long, default_value = "greedy")]
    pub mode: Mode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Print the full report as JSON.
    #[arg(long)]
    pub json: bool,
    /// Also write the JSON report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub mcts: MctsArgs,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub problem: Problem,
    /// Instance files (repeatable).
    #[arg(long)]
    pub graph: Vec<PathBuf>,
    /// Directory of instance files, read in name order.
    #[arg(long)]
    pub graph_dir: Option<PathBuf>,
    /// Add this many seeded ER instances.
    #[arg(long, default_value_t = 0)]
    pub er_count: usize,
    #[arg(long, default_value_t = 12)]
    pub er_n: usize,
    #[arg(long, default_value_t = 0.3)]
    pub er_p: f64,
    /// One column per model file (and per mode).
    #[arg(long = "model-file", value_name = "FILE")]
    pub model_files: Vec<PathBuf>,
    /// Models of one best-of-k column.
    #[arg(long = "ensemble-file", value_name = "FILE")]
    pub ensemble_files: Vec<PathBuf>,
    #[arg(long)]
    pub kind: Option<ModelKind>,
    /// Network modes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "greedy")]
    pub modes: Vec<Mode>,
    /// Add uniform-stub columns.
    #[arg(long)]
    pub stub: bool,
    /// Add the randomized baseline column (problems that have one).
    #[arg(long)]
    pub baseline: bool,
    #[arg(long, default_value_t = 100)]
    pub baseline_runs: usize,
    /// Add the exact oracle column (dropped if an instance exceeds the cap).
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
    pub oracle_cap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub mcts: MctsArgs,
}

#[derive(Args, Debug)]
pub struct BaselineArgs {
    #[arg(long)]
    pub problem: Problem,
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Vertex cover only: run the pseudocode exactly as printed and report
    /// its counter. This variant does not build a cover.
    #[arg(long)]
    pub literal: bool,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// er, ba, ws, regular or tree.
    #[arg(long, default_value = "er")]
    pub family: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.15)]
    pub p: f64,
    /// BA edges per new node.
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    /// WS ring degree.
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    /// Regular degree.
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Output file (count = 1) or directory; stdout when absent and count = 1.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match with_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Executes a parsed command and returns what it prints to stdout.
pub fn run(cmd: Command) -> Result<String> {
    match cmd {
        Command::Train(a) => cmd_train(a),
        Command::Solve(a) => cmd_solve(a, false),
        Command::Trace(a) => cmd_solve(a, true),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::GenerateGraph(a) => cmd_generate(a),
    }
}

// ---- config files ----

/// Appends config-file entries as flags, skipping any flag already present.
fn with_config(mut args: Vec<OsString>) -> Result<Vec<OsString>> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut config = None;
    let mut sub = None;
    let mut i = 1;
    while i < strs.len() {
        let s = &strs[i];
        if s == "--config" {
            config = strs.get(i + 1).cloned();
            i += 2;
            continue;
        }
        if let Some(v) = s.strip_prefix("--config=") {
            config = Some(v.to_string());
        } else if sub.is_none() && !s.starts_with('-') {
            sub = Some(s.clone());
        }
        i += 1;
    }
    let (Some(path), Some(sub)) = (config, sub) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Error::input(format!("config {path}: {e}")))?;
    let entries = parse_config(&text, &sub)?;
    let root = Cli::command();
    let Some(cmd) = root.find_subcommand(&sub) else {
        return Ok(args); // clap reports the unknown subcommand
    };
    let present: Vec<&str> = strs
        .iter()
        .filter_map(|s| s.strip_prefix("--"))
        .map(|s| s.split('=').next().unwrap())
        .collect();
    let known_elsewhere = |key: &str| {
        root.get_subcommands().flat_map(|c| c.get_arguments()).any(|a| a.get_long() == Some(key))
    };
    for (key, values) in entries {
        let Some(arg) = cmd.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
            // shared config files may carry other subcommands' flags
            if known_elsewhere(&key) {
                continue;
            }
            return Err(Error::input(format!("config key {key:?} is not a flag of any subcommand")));
        };
        if key == "config" || present.contains(&key.as_str()) {
            continue;
        }
        if arg.get_action().takes_values() {
            for v in values {
                args.push(format!("--{key}={v}").into());
            }
        } else {
            match values.last().map(String::as_str) {
                Some("true") => args.push(format!("--{key}").into()),
                Some("false") => {}
                v => return Err(Error::input(format!("config key {key:?} expects true or false, got {v:?}"))),
            }
        }
    }
    Ok(args)
}

/// Flat `(flag, values)` list for subcommand `sub`, in file order.
fn parse_config(text: &str, sub: &str) -> Result<Vec<(String, Vec<String>)>> {
    let mut out: Vec<(String, Vec<String>)> = Vec::new();
    let mut add = |key: &str, value: String| {
        let key = key.trim().replace('_', "-");
        match out.iter_mut().find(|(k, _)| *k == key) {
            Some((_, vs)) => vs.push(value),
            None => out.push((key, vec![value])),
        }
    };
    if text.trim_start().starts_with('{') {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::input(format!("config JSON: {e}")))?;
        let Value::Object(map) = v else { unreachable!() };
        let subcommands: Vec<String> = Cli::command().get_subcommands().map(|c| c.get_name().to_string()).collect();
        let mut flat = Vec::new();
        for (k, v) in map {
            match v {
                Value::Object(inner) if k == sub => flat.extend(inner),
                Value::Object(_) if subcommands.contains(&k) => {}
                v => flat.push((k, v)),
            }
        }
        for (k, v) in flat {
            let values = match v {
                Value::Array(items) => items,
                v => vec![v],
            };
            for v in values {
                let s = match v {
                    Value::String(s) => s,
                    Value::Bool(b) => b.to_string(),
                    Value::Number(n) => n.to_string(),
                    other => return Err(Error::input(format!("config key {k:?}: unsupported value {other}"))),
                };
                add(&k, s);
            }
        }
    } else {
        let mut section: Option<String> = None;
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = Some(name.trim().to_string());
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: ln + 1, msg: format!("expected key = value, got {line:?}") })?;
            if section.as_deref().is_none_or(|s| s == sub) {
                add(k, v.trim().trim_matches('"').to_string());
            }
        }
    }
    Ok(out)
}

// ---- commands ----

fn read_graph(path: &Path) -> Result<Graph> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
    parse_edge_list(&text)
}

fn load_model(path: &Path, kind: Option<ModelKind>, problem: Problem) -> Result<Params> {
    let p = match kind {
        Some(k) => load_params_as(path, k)?,
        None => load_params(path)?,
    };
    p.check_problem(problem)?;
    Ok(p)
}

fn write_out(path: &Option<PathBuf>, text: &str) -> Result<()> {
    if let Some(p) = path {
        std::fs::write(p, text)?;
    }
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<String> {
    let mut cfg = TrainConfig::new(a.problem, a.model);
    cfg.seed = a.seed;
    cfg.max_rounds = a.rounds;
    cfg.max_wall = a.max_minutes.map(|m| Duration::from_secs_f64(m.max(0.0) * 60.0));
    macro_rules! set {
        ($($field:ident),*) => { $(if let Some(v) = a.$field { cfg.$field = v; })* };
    }
    set!(lr, weight_decay, batch_size, trajectories_per_round, rounds_per_candidate, eval_instances, episodes_per_round, scale, generators, learners, evaluators);
    if let (Some(min_n), Some(max_n), Some(p)) = (a.min_n, a.max_n, a.p) {
        cfg.distribution = Some(ErDistribution { min_n, max_n, p });
    }
    cfg.single_thread = !a.threaded;
    cfg.checkpoint_dir = a.checkpoint_dir;
    cfg.metrics_path = a.metrics;
    cfg.mcts = a.mcts.apply(cfg.mcts)?;
    let outcome = train(&cfg)?;
    save_params(&outcome.best, &a.out)?;
    Ok(format!(
        "trained {} {} for {} rounds ({} trajectories); best model version {} written to {}\n",
        cfg.problem,
        cfg.model,
        outcome.rounds,
        outcome.trajectories,
        outcome.version,
        a.out.display()
    ))
}

fn cmd_solve(a: SolveArgs, trace: bool) -> Result<String> {
    let g = read_graph(&a.graph)?;
    let mut opts = SolveOptions::new(a.mode);
    opts.mcts = a.mcts.apply(opts.mcts)?;
    opts.seed = a.seed;
    opts.trace_stats = trace;
    let report = if a.stub {
        solve(a.problem, &g, &UniformStub, &opts)?
    } else {
        if a.model_files.is_empty() {
            return Err(Error::input("give --model-file (repeatable) or --stub"));
        }
        let models = a
            .model_files
            .iter()
            .map(|p| load_model(p, a.kind, a.problem).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;
        solve_ensemble(a.problem, &g, &models, &opts)?
    };
    debug_assert!(verify_certificate(a.problem, &g, &report.certificate));
    let json = serde_json::to_string_pretty(&report)? + "\n";
    write_out(&a.out, &json)?;
    Ok(if a.json {
        json
    } else if trace {
        trace_text(&report)
    } else {
        summary_text(&report)
    })
}

fn summary_text(r: &RunReport) -> String {
    let mut s = format!("{} objective {} ({} steps, {:.1} ms)\n", r.problem, r.objective, r.steps.len(), r.wall_ms);
    if let Some(nodes) = &r.certificate.nodes {
        s += &format!("nodes {}\n", nodes.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "));
    }
    if let Some(colors) = &r.certificate.colors {
        s += &format!("colors {}\n", colors.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" "));
    }
    s
}

fn trace_text(r: &RunReport) -> String {
    let mut s = String::from("step  nodes  edges  node  orig  color  reward  entropy        mu     sigma\n");
    for st in &r.steps {
        let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3}"));
        s += &format!(
            "{:>4}  {:>5}  {:>5}  {:>4}  {:>4}  {:>5}  {:>6}  {:>7.4}  {:>8}  {:>8}\n",
            st.step,
            st.nodes,
            st.edges,
            st.node,
            st.original_node,
            st.color.map_or("-".to_string(), |c| c.to_string()),
            st.reward,
            st.entropy,
            opt(st.mu),
            opt(st.sigma)
        );
    }
    s + &format!("objective {}\n", r.objective)
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<String> {
    let mut instances = Vec::new();
    for p in &a.graph {
        instances.push(Instance { name: p.display().to_string(), graph: read_graph(p)? });
    }
    if let Some(dir) = &a.graph_dir {
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        files.retain(|p| p.is_file());
        files.sort();
        for p in files {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            instances.push(Instance { name, graph: read_graph(&p)? });
        }
    }
    for i in 0..a.er_count {
        let seed = mix_seed(&[a.seed, 0x6576_616c, i as u64]);
        instances.push(Instance { name: format!("er{i}"), graph: generate(&GenSpec::er(a.er_n, a.er_p, seed))? });
    }
    if instances.is_empty() {
        return Err(Error::input("no instances (use --graph, --graph-dir or --er-count)"));
    }
    let mut solvers = Vec::new();
    for p in &a.model_files {
        let m = Arc::new(load_model(p, a.kind, a.problem)?);
        let label = p.file_stem().map_or("model".into(), |s| s.to_string_lossy().into_owned());
        for &mode in &a.modes {
            solvers.push(SolverSpec::Network { label: label.clone(), models: vec![m.clone()], mode });
        }
    }
    if !a.ensemble_files.is_empty() {
        let models =
            a.ensemble_files.iter().map(|p| load_model(p, a.kind, a.problem).map(Arc::new)).collect::<Result<Vec<_>>>()?;
        for &mode in &a.modes {
            solvers.push(SolverSpec::Network { label: "ensemble".into(), models: models.clone(), mode });
        }
    }
    if a.stub {
        solvers.extend(a.modes.iter().map(|&mode| SolverSpec::Stub { mode }));
    }
    if a.baseline {
        solvers.push(SolverSpec::Baseline { baseline: Baseline::for_problem(a.problem)?, runs: a.baseline_runs });
    }
    if a.oracle {
        solvers.push(SolverSpec::Oracle { cap: a.oracle_cap });
    }
    if solvers.is_empty() {
        return Err(Error::input("no solvers (use --model-file, --ensemble-file, --stub, --baseline or --oracle)"));
    }
    let mcts = a.mcts.apply(SolveOptions::new(Mode::Mcts).mcts)?;
    let table = evaluate(a.problem, &instances, &solvers, &mcts, a.seed)?;
    let json = serde_json::to_string_pretty(&table)? + "\n";
    write_out(&a.out, &json)?;
    Ok(if a.json { json } else { table.to_text() })
}

fn cmd_baseline(a: BaselineArgs) -> Result<String> {
    let g = read_graph(&a.graph)?;
    if a.literal {
        if a.problem != Problem::Mvc {
            return Err(Error::input("--literal applies to mvc only"));
        }
        let r = mvc_literal(&g, &mut stream_rng(a.seed, 0));
        return Ok(if a.json {
            json!({"variant": "mvc-literal", "counter": r, "note": "not a vertex cover"}).to_string() + "\n"
        } else {
            format!("mvc-literal counter {r} (not a vertex cover)\n")
        });
    }
    let res = best_of(Baseline::for_problem(a.problem)?, &g, a.runs, a.seed)?;
    if !verify_certificate(a.problem, &g, &res.certificate) {
        return Err(Error::contract("baseline produced an invalid certificate"));
    }
    Ok(if a.json {
        serde_json::to_string_pretty(&res)? + "\n"
    } else {
        let nodes = res.certificate.nodes.as_ref().map_or(String::new(), |ns| {
            ns.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
        });
        format!("{} objective {} (best of {} runs, run {})\nnodes {nodes}\n", a.problem, res.objective, res.runs, res.best_run)
    })
}

fn cmd_generate(a: GenerateArgs) -> Result<String> {
    let family = match a.family.as_str() {
        "er" => Family::Er { p: a.p },
        "ba" => Family::Ba { m: a.m },
        "ws" => Family::Ws { k: a.k, beta: a.beta },
        "regular" => Family::Regular { d: a.d },
        "tree" => Family::Tree,
        f => return Err(Error::input(format!("unknown family {f:?} (expected er, ba, ws, regular, tree)"))),
    };
    if a.count == 0 {
        return Err(Error::input("--count must be positive"));
    }
    let spec = |i: usize| GenSpec {
        family,
        n: a.n,
        seed: if a.count == 1 { a.seed } else { mix_seed(&[a.seed, i as u64]) },
    };
    if a.count == 1 {
        let text = serialize_edge_list(&generate(&spec(0))?);
        return match &a.out {
            Some(p) => {
                std::fs::write(p, text)?;
                Ok(String::new())
            }
            None => Ok(text),
        };
    }
    let dir = a.out.as_ref().ok_or_else(|| Error::input("--count > 1 needs --out DIR"))?;
    std::fs::create_dir_all(dir)?;
    for i in 0..a.count {
        std::fs::write(dir.join(format!("{}-{i:04}.txt", a.family)), serialize_edge_list(&generate(&spec(i))?))?;
    }
    Ok(format!("wrote {} graphs to {}\n", a.count, dir.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_value_config_respects_sections() {
        let text = "seed = 3\n# comment\n[train]\nrounds = 5\n[solve]\nmode = mcts\n";
        let e = parse_config(text, "train").unwrap();
        assert_eq!(e, vec![("seed".to_string(), vec!["3".to_string()]), ("rounds".to_string(), vec!["5".to_string()])]);
    }

    #[test]
    fn json_config_flattens_arrays_and_sections() {
        let text = r#"{"seed": 4, "model_file": ["a", "b"], "solve": {"no_noise": true}, "train": {"rounds": 2}}"#;
        let e = parse_config(text, "solve").unwrap();
        assert!(e.contains(&("model-file".to_string(), vec!["a".to_string(), "b".to_string()])));
        assert!(e.contains(&("no-noise".to_string(), vec!["true".to_string()])));
        assert!(!e.iter().any(|(k, _)| k == "rounds"));
    }

    #[test]
    fn flags_win_over_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.conf");
        std::fs::write(&cfg, "seed = 9\nmode = mcts\nno_noise = true\n").unwrap();
        let args: Vec<OsString> = ["graphzero", "solve", "--config", cfg.to_str().unwrap(), "--seed", "1", "--problem", "mvc", "--graph", "g"]
            .iter()
            .map(OsString::from)
            .collect();
        let out = with_config(args).unwrap();
        let out: Vec<String> = out.iter().map(|s| s.to_string_lossy().into_owned()).collect();
        assert!(out.contains(&"--mode=mcts".to_string()));
        assert!(out.contains(&"--no-noise".to_string()));
        assert!(!out.iter().any(|s| s == "--seed=9"));
    }

    #[test]
    fn other_subcommands_keys_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.conf");
        std::fs::write(&cfg, "rounds = 5\nseed = 2\n").unwrap();
        let args: Vec<OsString> =
            ["graphzero", "generate-graph", "--n", "3", "--config", cfg.to_str().unwrap()].iter().map(OsString::from).collect();
        let out: Vec<String> = with_config(args).unwrap().iter().map(|s| s.to_string_lossy().into_owned()).collect();
        assert!(out.contains(&"--seed=2".to_string()));
        assert!(!out.iter().any(|s| s.starts_with("--rounds")));
    }

    #[test]
    fn unknown_config_key_is_an_input_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.conf");
        std::fs::write(&cfg, "bogus = 1\n").unwrap();
        let code = main_with_args(["graphzero", "generate-graph", "--n", "3", "--config", cfg.to_str().unwrap()]);
        assert_eq!(code, 2);
    }
}
