//! Self-play training: generators produce search-guided episodes, learners
//! fit the network to them, evaluators decide whether a learner's candidate
//! replaces the shared best model.
//!
//! Two drivers share the same pieces. [`train`] with `single_thread` runs
//! the roles round-robin and is a pure function of the seed (metrics logs are
//! byte-identical across runs). Otherwise the roles run on their own threads,
//! sharing only the replay buffer and the model store, and trajectories
//! expire by wall clock.

use crate::env::{Action, Environment, Problem, State};
use crate::error::{Error, Result};
use crate::generators::ErDistribution;
use crate::gnn::{loss_and_gradients, save_params, Dims, Example, ModelKind, Params, PolicyValue};
use crate::graph::Graph;
use crate::mcts::{MctsConfig, NodeStats, SearchTree};
use crate::rng::{stream_rng, Rng};
use crate::solve::greedy_actions;
use parking_lot::{Condvar, Mutex, RwLock};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::VecDeque;
use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

/// One move of a self-play episode.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub state: State,
    pub action: Action,
    pub pi: Vec<f64>,
    /// Normalised return `(z − μ)/σ` from this state.
    pub z: f64,
    pub reward: i64,
    /// Random-playout statistics the search computed for this state.
    pub stats: NodeStats,
    pub tick: u64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub tick: u64,
    pub created: Instant,
}

impl Trajectory {
    pub fn total_reward(&self) -> i64 {
        self.records.iter().map(|r| r.reward).sum()
    }
}

/// `z′` for every step: cumulative rewards summed backwards, each normalised
/// by that step's `(μ, σ)`.
pub fn normalized_returns(rewards: &[i64], stats: &[NodeStats]) -> Vec<f64> {
    assert_eq!(rewards.len(), stats.len());
    let mut out = vec![0.0; rewards.len()];
    let mut z = 0.0;
    for i in (0..rewards.len()).rev() {
        z += rewards[i] as f64;
        out[i] = (z - stats[i].mu) / stats[i].sigma;
    }
    out
}

/// Samples an index from a probability vector.
pub fn sample_from(pi: &[f64], rng: &mut Rng) -> usize {
    let x: f64 = rng.random::<f64>() * pi.iter().sum::<f64>();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in pi.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if x < acc {
                return i;
            }
        }
    }
    last
}

/// Plays one episode from `Init(g0)`, searching before every move and
/// sampling the move from `π`. The search tree is reused across moves, and
/// each record keeps the root statistics of its own search.
pub fn generate_selfplay(
    env: &dyn Environment,
    g0: &Graph,
    net: &dyn PolicyValue,
    cfg: &MctsConfig,
    rng: &mut Rng,
    tick: u64,
) -> Result<Trajectory> {
    let mut tree = SearchTree::new(env, env.init(g0), cfg.clone())?;
    let mut records = Vec::new();
    while !tree.root_is_terminal() {
        let pi = tree.search(net, rng)?;
        let a = sample_from(&pi, rng);
        let action = Action::from_index(env.problem(), a);
        let state = tree.root_state().clone();
        let stats = tree.root_stats().expect("searched root is expanded");
        let reward = env.reward(&state, action);
        records.push(TrajectoryRecord { state, action, pi, z: 0.0, reward, stats, tick });
        tree.advance(a, rng)?;
    }
    let rewards: Vec<i64> = records.iter().map(|r| r.reward).collect();
    let stats: Vec<NodeStats> = records.iter().map(|r| r.stats).collect();
    for (r, z) in records.iter_mut().zip(normalized_returns(&rewards, &stats)) {
        r.z = z;
    }
    Ok(Trajectory { records, tick, created: Instant::now() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expiry {
    /// Expire once this many newer trajectories have been added.
    Ticks(u64),
    WallClock(Duration),
}

impl Expiry {
    /// Wall-clock horizon of a problem: 5 minutes, 10 for vertex cover and
    /// feedback vertex set.
    pub fn wall_clock_for(problem: Problem) -> Self {
        Expiry::WallClock(Duration::from_secs(if problem.is_minimization() { 600 } else { 300 }))
    }
}

pub struct ReplayBuffer {
    trajectories: VecDeque<Trajectory>,
    expiry: Expiry,
    capacity: usize,
    newest: u64,
}

impl ReplayBuffer {
    pub fn new(expiry: Expiry, capacity: usize) -> Self {
        ReplayBuffer { trajectories: VecDeque::new(), expiry, capacity: capacity.max(1), newest: 0 }
    }

    /// Adds a trajectory; empty ones carry no training signal and are dropped.
    pub fn push(&mut self, t: Trajectory) {
        self.newest = self.newest.max(t.tick);
        if !t.records.is_empty() {
            self.trajectories.push_back(t);
        }
        while self.trajectories.len() > self.capacity {
            self.trajectories.pop_front();
        }
        self.expire(Instant::now());
    }

    fn is_live(&self, t: &Trajectory, now: Instant) -> bool {
        match self.expiry {
            Expiry::Ticks(h) => self.newest - t.tick < h,
            Expiry::WallClock(d) => now.duration_since(t.created) < d,
        }
    }

    pub fn expire(&mut self, now: Instant) {
        while self.trajectories.front().is_some_and(|t| !self.is_live(t, now)) {
            self.trajectories.pop_front();
        }
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn record_count(&self) -> usize {
        self.trajectories.iter().map(|t| t.records.len()).sum()
    }

    /// Up to `k` distinct live trajectories, uniformly at random.
    pub fn sample(&self, k: usize, rng: &mut Rng) -> Vec<&Trajectory> {
        let now = Instant::now();
        let live: Vec<&Trajectory> = self.trajectories.iter().filter(|t| self.is_live(t, now)).collect();
        let k = k.min(live.len());
        rand::seq::index::sample(rng, live.len(), k).into_iter().map(|i| live[i]).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Trajectory> {
        self.trajectories.iter()
    }
}

/// Immutable published model.
#[derive(Debug)]
pub struct Snapshot {
    pub params: Params,
    pub version: u64,
}

/// Shared best model. Readers get a whole snapshot or nothing.
pub struct ModelStore {
    current: RwLock<Arc<Snapshot>>,
}

impl ModelStore {
    pub fn new(params: Params) -> Self {
        ModelStore { current: RwLock::new(Arc::new(Snapshot { params, version: 0 })) }
    }

    pub fn get(&self) -> Arc<Snapshot> {
        self.current.read().clone()
    }

    pub fn version(&self) -> u64 {
        self.current.read().version
    }

    /// Installs a new best model and returns its version.
    pub fn publish(&self, params: Params) -> u64 {
        let mut cur = self.current.write();
        let version = cur.version + 1;
        *cur = Arc::new(Snapshot { params, version });
        version
    }
}

/// Adam with bias correction. Moments are kept in `f64`; weights are
/// rounded back to `f32` after every step.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(len: usize, lr: f64) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }

    pub fn step(&mut self, params: &mut Params, grads: &[f64]) {
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (i, w) in params.weights.iter_mut().enumerate() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let update = self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
            *w = (*w as f64 - update) as f32;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub problem: Problem,
    pub model: ModelKind,
    /// Overrides the standard backbone sizes.
    pub dims: Option<Dims>,
    pub seed: u64,
    pub generators: usize,
    pub learners: usize,
    pub evaluators: usize,
    pub lr: f64,
    /// `c_reg` of the loss.
    pub weight_decay: f64,
    pub batch_size: usize,
    pub trajectories_per_round: usize,
    pub rounds_per_candidate: usize,
    pub eval_instances: usize,
    /// Node-count scale of the problem's training distribution.
    pub scale: f64,
    /// Replaces the problem's training distribution.
    pub distribution: Option<ErDistribution>,
    pub mcts: MctsConfig,
    /// Budget in learner rounds (all learners together).
    pub max_rounds: u64,
    /// Optional wall-clock budget; hitting it ends a deterministic run early.
    pub max_wall: Option<Duration>,
    /// Self-play episodes generated per learner round in round-robin mode.
    pub episodes_per_round: usize,
    /// Deterministic-mode expiry horizon in trajectories.
    pub expiry_ticks: u64,
    pub buffer_capacity: usize,
    pub single_thread: bool,
    pub checkpoint_dir: Option<PathBuf>,
    pub metrics_path: Option<PathBuf>,
}

impl TrainConfig {
    pub fn new(problem: Problem, model: ModelKind) -> Self {
        TrainConfig {
            problem,
            model,
            dims: None,
            seed: 0,
            generators: 1,
            learners: 1,
            evaluators: 1,
            lr: 0.001,
            weight_decay: 0.0001,
            batch_size: 16,
            trajectories_per_round: 20,
            rounds_per_candidate: 15,
            eval_instances: 50,
            scale: 1.0,
            distribution: None,
            mcts: MctsConfig::for_problem(problem),
            max_rounds: 150,
            max_wall: None,
            episodes_per_round: 4,
            expiry_ticks: 200,
            buffer_capacity: 10_000,
            single_thread: true,
            checkpoint_dir: None,
            metrics_path: None,
        }
    }

    pub fn distribution(&self) -> ErDistribution {
        self.distribution.unwrap_or_else(|| ErDistribution::for_problem(self.problem, self.scale))
    }

    pub fn dims(&self) -> Dims {
        self.dims.unwrap_or_else(|| {
            Dims::standard(self.model, self.problem.feature_dim(), 2 * self.problem.actions_per_node())
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.mcts.validate()?;
        self.dims().validate(self.model)?;
        let counts = [
            self.generators,
            self.learners,
            self.evaluators,
            self.batch_size,
            self.trajectories_per_round,
            self.rounds_per_candidate,
            self.eval_instances,
        ];
        if counts.contains(&0) {
            return Err(Error::input("worker counts, batch size, rounds and instance counts must be positive"));
        }
        if !(self.lr >= 0.0 && self.weight_decay >= 0.0 && self.scale > 0.0) {
            return Err(Error::input("lr and weight decay must be non-negative, scale positive"));
        }
        let d = self.distribution();
        if d.min_n == 0 || d.min_n > d.max_n || !(0.0..=1.0).contains(&d.p) {
            return Err(Error::input(format!("invalid training distribution {d:?}")));
        }
        Ok(())
    }
}

/// One learner round: draw trajectories, flatten them, shuffle, and take an
/// Adam step per minibatch. Returns the mean minibatch loss, or `None` when
/// the buffer holds nothing to learn from.
pub fn learner_round(
    params: &mut Params,
    adam: &mut Adam,
    env: &dyn Environment,
    buffer: &ReplayBuffer,
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<Option<f64>> {
    let trajectories = buffer.sample(cfg.trajectories_per_round, rng);
    train_on(params, adam, env, &trajectories, cfg, rng)
}

/// The optimisation part of [`learner_round`] on already drawn trajectories.
pub fn train_on(
    params: &mut Params,
    adam: &mut Adam,
    env: &dyn Environment,
    trajectories: &[&Trajectory],
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<Option<f64>> {
    let mut records: Vec<&TrajectoryRecord> = trajectories.iter().flat_map(|t| t.records.iter()).collect();
    if records.is_empty() {
        return Ok(None);
    }
    records.shuffle(rng);
    let problem = env.problem();
    let mut total = 0.0;
    let mut steps = 0;
    for chunk in records.chunks(cfg.batch_size) {
        let batch: Vec<Example> = chunk
            .iter()
            .map(|r| Example { state: &r.state, action: r.action.index(problem), pi: &r.pi, z: r.z })
            .collect();
        let g = loss_and_gradients(params, env, &batch, cfg.weight_decay)?;
        adam.step(params, &g.grads);
        total += g.loss;
        steps += 1;
    }
    Ok(Some(total / steps as f64))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub best_mean: f64,
    pub candidate_mean: f64,
    pub candidate_wins: bool,
}

/// Greedy objective of `net` on `g`.
pub fn greedy_objective(problem: Problem, g: &Graph, net: &dyn PolicyValue) -> Result<i64> {
    let env = problem.env();
    let actions = greedy_actions(env, g, net)?;
    let mut s = env.init(g);
    let mut total = 0;
    for a in actions {
        let (next, r) = env.step(&s, a)?;
        total += r;
        s = next;
    }
    Ok(problem.objective_from_reward(total))
}

/// Both models play greedily on the same instances; the candidate wins only
/// with a strictly better mean objective.
pub fn evaluate_on(problem: Problem, best: &dyn PolicyValue, candidate: &dyn PolicyValue, instances: &[Graph]) -> Result<Evaluation> {
    let scores: Vec<(i64, i64)> = instances
        .par_iter()
        .map(|g| Ok((greedy_objective(problem, g, best)?, greedy_objective(problem, g, candidate)?)))
        .collect::<Result<_>>()?;
    let n = scores.len().max(1) as f64;
    let best_mean = scores.iter().map(|s| s.0 as f64).sum::<f64>() / n;
    let candidate_mean = scores.iter().map(|s| s.1 as f64).sum::<f64>() / n;
    Ok(Evaluation { best_mean, candidate_mean, candidate_wins: problem.better(candidate_mean, best_mean) })
}

/// Draws `cfg.eval_instances` fresh training-distribution graphs and compares.
pub fn evaluate_candidate(best: &dyn PolicyValue, candidate: &dyn PolicyValue, cfg: &TrainConfig, rng: &mut Rng) -> Result<Evaluation> {
    let dist = cfg.distribution();
    let instances: Vec<Graph> = (0..cfg.eval_instances).map(|_| dist.sample(rng)).collect();
    evaluate_on(cfg.problem, best, candidate, &instances)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Generator,
    Learner,
    Evaluator,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricEvent {
    pub tick: u64,
    pub role: Role,
    pub event: &'static str,
    pub payload: Value,
}

/// JSON-lines metrics, kept in memory and optionally mirrored to a file.
pub struct MetricsLog {
    events: Mutex<Vec<MetricEvent>>,
    file: Option<Mutex<std::io::BufWriter<std::fs::File>>>,
}

impl MetricsLog {
    pub fn new(path: Option<&std::path::Path>) -> Result<Self> {
        let file = match path {
            Some(p) => Some(Mutex::new(std::io::BufWriter::new(std::fs::File::create(p)?))),
            None => None,
        };
        Ok(MetricsLog { events: Mutex::new(Vec::new()), file })
    }

    pub fn emit(&self, tick: u64, role: Role, event: &'static str, payload: Value) -> Result<()> {
        let e = MetricEvent { tick, role, event, payload };
        if let Some(f) = &self.file {
            let mut f = f.lock();
            serde_json::to_writer(&mut *f, &e)?;
            f.write_all(b"\n")?;
            f.flush()?;
        }
        self.events.lock().push(e);
        Ok(())
    }

    pub fn into_events(self) -> Vec<MetricEvent> {
        self.events.into_inner()
    }
}

/// Renders events as JSON lines.
pub fn metrics_to_jsonl(events: &[MetricEvent]) -> String {
    events.iter().map(|e| serde_json::to_string(e).expect("serializable") + "\n").collect()
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub best: Params,
    pub version: u64,
    pub metrics: Vec<MetricEvent>,
    pub rounds: u64,
    pub trajectories: u64,
}

fn checkpoint(cfg: &TrainConfig, params: &Params, version: u64) -> Result<()> {
    if let Some(dir) = &cfg.checkpoint_dir {
        std::fs::create_dir_all(dir)?;
        save_params(params, &dir.join(format!("best-{version:05}.gzck")))?;
        save_params(params, &dir.join("best.gzck"))?;
    }
    Ok(())
}

/// Runs the training pipeline until the round budget (or the wall-clock
/// budget) is spent and returns the best model.
pub fn train(cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let init = Params::init(cfg.model, cfg.dims(), cfg.seed)?;
    let log = MetricsLog::new(cfg.metrics_path.as_deref())?;
    if cfg.max_rounds == 0 {
        return Ok(TrainOutcome { best: init, version: 0, metrics: log.into_events(), rounds: 0, trajectories: 0 });
    }
    checkpoint(cfg, &init, 0)?;
    if cfg.single_thread {
        train_round_robin(cfg, init, log)
    } else {
        train_threaded(cfg, init, log)
    }
}

fn train_round_robin(cfg: &TrainConfig, init: Params, log: MetricsLog) -> Result<TrainOutcome> {
    let env = cfg.problem.env();
    let dist = cfg.distribution();
    let store = ModelStore::new(init.clone());
    let mut buffer = ReplayBuffer::new(Expiry::Ticks(cfg.expiry_ticks), cfg.buffer_capacity);
    let (mut gen_rng, mut learn_rng, mut eval_rng) =
        (stream_rng(cfg.seed, 1), stream_rng(cfg.seed, 2), stream_rng(cfg.seed, 3));
    let mut learner = init;
    let mut adam = Adam::new(learner.weights.len(), cfg.lr);
    let mut seen_version = 0;
    let mut tick = 0;
    let start = Instant::now();
    let mut rounds = 0;
    while rounds < cfg.max_rounds && cfg.max_wall.is_none_or(|w| start.elapsed() < w) {
        let best = store.get();
        for _ in 0..cfg.episodes_per_round {
            let g = dist.sample(&mut gen_rng);
            tick += 1;
            let t = generate_selfplay(env, &g, &best.params, &cfg.mcts, &mut gen_rng, tick)?;
            log.emit(
                tick,
                Role::Generator,
                "trajectory",
                json!({"n": g.n(), "m": g.m(), "steps": t.records.len(), "objective": cfg.problem.objective_from_reward(t.total_reward()), "model_version": best.version}),
            )?;
            buffer.push(t);
        }
        if store.version() != seen_version {
            learner = store.get().params.clone();
            seen_version = store.version();
        }
        let Some(loss) = learner_round(&mut learner, &mut adam, env, &buffer, cfg, &mut learn_rng)? else {
            continue;
        };
        rounds += 1;
        log.emit(
            tick,
            Role::Learner,
            "round",
            json!({"round": rounds, "loss": loss, "buffer_trajectories": buffer.len(), "buffer_records": buffer.record_count()}),
        )?;
        if rounds % cfg.rounds_per_candidate as u64 == 0 {
            let best = store.get();
            let eval = evaluate_candidate(&best.params, &learner, cfg, &mut eval_rng)?;
            let version = if eval.candidate_wins {
                let v = store.publish(learner.clone());
                seen_version = v;
                checkpoint(cfg, &learner, v)?;
                v
            } else {
                best.version
            };
            log.emit(
                tick,
                Role::Evaluator,
                "evaluation",
                json!({"round": rounds, "best_mean": eval.best_mean, "candidate_mean": eval.candidate_mean, "accepted": eval.candidate_wins, "best_version": version}),
            )?;
        }
    }
    let best = store.get();
    Ok(TrainOutcome { best: best.params.clone(), version: best.version, metrics: log.into_events(), rounds, trajectories: tick })
}

fn train_threaded(cfg: &TrainConfig, init: Params, log: MetricsLog) -> Result<TrainOutcome> {
    let env = cfg.problem.env();
    let dist = cfg.distribution();
    let store = ModelStore::new(init);
    let buffer = Mutex::new(ReplayBuffer::new(Expiry::wall_clock_for(cfg.problem), cfg.buffer_capacity));
    let data_ready = Condvar::new();
    let candidates: Mutex<VecDeque<(u64, Params)>> = Mutex::new(VecDeque::new());
    let candidate_ready = Condvar::new();
    let stop = AtomicBool::new(false);
    let rounds = AtomicU64::new(0);
    let trajectories = AtomicU64::new(0);
    let start = Instant::now();
    let now_tick = || start.elapsed().as_millis() as u64;
    let out_of_budget =
        || rounds.load(Ordering::SeqCst) >= cfg.max_rounds || cfg.max_wall.is_some_and(|w| start.elapsed() >= w);

    let generator = |id: usize| -> Result<()> {
        let mut rng = stream_rng(cfg.seed, 100 + id as u64);
        while !stop.load(Ordering::SeqCst) {
            let best = store.get();
            let g = dist.sample(&mut rng);
            let tick = trajectories.fetch_add(1, Ordering::SeqCst) + 1;
            let t = generate_selfplay(env, &g, &best.params, &cfg.mcts, &mut rng, tick)?;
            log.emit(
                now_tick(),
                Role::Generator,
                "trajectory",
                json!({"worker": id, "n": g.n(), "steps": t.records.len(), "objective": cfg.problem.objective_from_reward(t.total_reward()), "model_version": best.version}),
            )?;
            buffer.lock().push(t);
            data_ready.notify_all();
        }
        Ok(())
    };

    let learner = |id: usize| -> Result<()> {
        let mut rng = stream_rng(cfg.seed, 200 + id as u64);
        let snap = store.get();
        let mut params = snap.params.clone();
        let mut seen = snap.version;
        let mut adam = Adam::new(params.weights.len(), cfg.lr);
        let mut mine = 0u64;
        while !stop.load(Ordering::SeqCst) {
            {
                let mut buf = buffer.lock();
                buf.expire(Instant::now());
                if buf.is_empty() {
                    data_ready.wait_for(&mut buf, Duration::from_millis(200));
                    continue;
                }
            }
            if store.version() != seen {
                let snap = store.get();
                params = snap.params.clone();
                seen = snap.version;
            }
            // copy the draw out so generators are not blocked while training
            let drawn: Vec<Trajectory> =
                buffer.lock().sample(cfg.trajectories_per_round, &mut rng).into_iter().cloned().collect();
            let refs: Vec<&Trajectory> = drawn.iter().collect();
            let loss = train_on(&mut params, &mut adam, env, &refs, cfg, &mut rng)?;
            let Some(loss) = loss else { continue };
            mine += 1;
            let total = rounds.fetch_add(1, Ordering::SeqCst) + 1;
            log.emit(now_tick(), Role::Learner, "round", json!({"worker": id, "round": total, "loss": loss}))?;
            if mine % cfg.rounds_per_candidate as u64 == 0 {
                candidates.lock().push_back((id as u64, params.clone()));
                candidate_ready.notify_one();
            }
            if out_of_budget() {
                stop.store(true, Ordering::SeqCst);
            }
        }
        Ok(())
    };

    let evaluator = |id: usize| -> Result<()> {
        let mut rng = stream_rng(cfg.seed, 300 + id as u64);
        loop {
            let next = {
                let mut q = candidates.lock();
                if q.is_empty() {
                    if stop.load(Ordering::SeqCst) {
                        return Ok(());
                    }
                    candidate_ready.wait_for(&mut q, Duration::from_millis(200));
                }
                q.pop_front()
            };
            let Some((from, candidate)) = next else { continue };
            let best = store.get();
            let eval = evaluate_candidate(&best.params, &candidate, cfg, &mut rng)?;
            // replacement is serialised: re-check that nobody published meanwhile
            let version = if eval.candidate_wins && store.version() == best.version {
                let v = store.publish(candidate.clone());
                checkpoint(cfg, &candidate, v)?;
                v
            } else {
                store.version()
            };
            log.emit(
                now_tick(),
                Role::Evaluator,
                "evaluation",
                json!({"worker": id, "learner": from, "best_mean": eval.best_mean, "candidate_mean": eval.candidate_mean, "accepted": eval.candidate_wins, "best_version": version}),
            )?;
        }
    };

    let watchdog = || {
        while !stop.load(Ordering::SeqCst) {
            if out_of_budget() {
                stop.store(true, Ordering::SeqCst);
            }
            std::thread::sleep(Duration::from_millis(50));
        }
    };

    let results: Vec<std::thread::Result<Result<()>>> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        let fail_safe = |r: Result<()>| {
            if r.is_err() {
                stop.store(true, Ordering::SeqCst);
            }
            r
        };
        for i in 0..cfg.generators {
            handles.push(scope.spawn(move || fail_safe(generator(i))));
        }
        for i in 0..cfg.learners {
            handles.push(scope.spawn(move || fail_safe(learner(i))));
        }
        for i in 0..cfg.evaluators {
            handles.push(scope.spawn(move || fail_safe(evaluator(i))));
        }
        scope.spawn(watchdog);
        handles.into_iter().map(|h| h.join()).collect()
    });
    for r in results {
        match r {
            Err(_) => return Err(Error::Worker("a training worker panicked".into())),
            Ok(Err(e)) => return Err(Error::Worker(e.to_string())),
            Ok(Ok(())) => {}
        }
    }
    let best = store.get();
    Ok(TrainOutcome {
        best: best.params.clone(),
        version: best.version,
        metrics: log.into_events(),
        rounds: rounds.load(Ordering::SeqCst),
        trajectories: trajectories.load(Ordering::SeqCst),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::{NetworkOutput, UniformStub};

    #[test]
    fn single_edge_selfplay() {
        let env = Problem::Mvc.env();
        let mut rng = stream_rng(1, 0);
        let t = generate_selfplay(env, &Graph::path(2), &UniformStub, &MctsConfig::for_problem(Problem::Mvc), &mut rng, 1).unwrap();
        assert_eq!(t.records.len(), 1);
        let r = &t.records[0];
        assert_eq!((r.reward, r.stats.mu, r.stats.sigma, r.z), (-1, -1.0, 1.0, 0.0));
    }

    #[test]
    fn maxcut_triangle_selfplay() {
        let env = Problem::MaxCut.env();
        let mut rng = stream_rng(2, 0);
        let t = generate_selfplay(env, &Graph::complete(3), &UniformStub, &MctsConfig::default(), &mut rng, 1).unwrap();
        assert_eq!(t.records.len(), 3);
        let last = t.records.last().unwrap();
        assert_eq!(last.z, (last.reward as f64 - last.stats.mu) / last.stats.sigma);
        for r in &t.records {
            assert!((r.pi.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn stored_returns_recompute_exactly() {
        let env = Problem::Mis.env();
        let mut rng = stream_rng(3, 0);
        let g = crate::generators::generate(&crate::generators::GenSpec::er(12, 0.3, 3)).unwrap();
        let t = generate_selfplay(env, &g, &UniformStub, &MctsConfig::default(), &mut rng, 1).unwrap();
        assert!(t.records.len() <= g.n());
        let rewards: Vec<i64> = t.records.iter().map(|r| r.reward).collect();
        let stats: Vec<NodeStats> = t.records.iter().map(|r| r.stats).collect();
        let z = normalized_returns(&rewards, &stats);
        assert!(t.records.iter().zip(z).all(|(r, z)| r.z.to_bits() == z.to_bits()));
    }

    fn traj(tick: u64, len: usize) -> Trajectory {
        let s = State::new(Graph::path(2));
        let rec = TrajectoryRecord {
            state: s,
            action: Action::node(0),
            pi: vec![1.0, 0.0],
            z: 0.0,
            reward: -1,
            stats: NodeStats { mu: 0.0, sigma: 1.0 },
            tick,
        };
        Trajectory { records: vec![rec; len], tick, created: Instant::now() }
    }

    #[test]
    fn buffer_expires_by_ticks() {
        let mut buf = ReplayBuffer::new(Expiry::Ticks(3), 100);
        for t in 1..=5 {
            buf.push(traj(t, 1));
        }
        let ticks: Vec<u64> = buf.iter().map(|t| t.tick).collect();
        assert_eq!(ticks, vec![3, 4, 5]);
        buf.push(traj(6, 0));
        assert_eq!(buf.len(), 2);
        let mut rng = stream_rng(0, 0);
        assert!(buf.sample(10, &mut rng).iter().all(|t| t.tick >= 4));
    }

    #[test]
    fn store_versions_are_monotone() {
        let p = Params::for_problem(ModelKind::Gcn, Problem::Mvc, 0).unwrap();
        let store = ModelStore::new(p.clone());
        assert_eq!(store.version(), 0);
        assert_eq!(store.publish(p.clone()), 1);
        assert_eq!(store.publish(p), 2);
        assert_eq!(store.get().version, 2);
    }

    #[test]
    fn zero_learning_rate_keeps_params() {
        let env = Problem::Mvc.env();
        let mut cfg = TrainConfig::new(Problem::Mvc, ModelKind::Gcn);
        cfg.lr = 0.0;
        let mut params = Params::for_problem(ModelKind::Gcn, Problem::Mvc, 0).unwrap();
        let before = params.clone();
        let mut adam = Adam::new(params.weights.len(), 0.0);
        let mut buf = ReplayBuffer::new(Expiry::Ticks(10), 10);
        buf.push(traj(1, 1));
        let loss = learner_round(&mut params, &mut adam, env, &buf, &cfg, &mut stream_rng(0, 0)).unwrap();
        assert!(loss.is_some());
        assert_eq!(params, before);
        let empty = ReplayBuffer::new(Expiry::Ticks(10), 10);
        assert_eq!(learner_round(&mut params, &mut adam, env, &empty, &cfg, &mut stream_rng(0, 0)).unwrap(), None);
    }

    #[test]
    fn weight_decay_alone_shrinks_norm() {
        let mut params = Params::for_problem(ModelKind::Gcn, Problem::Mvc, 0).unwrap();
        let mut last = params.squared_norm();
        let lr = 0.01;
        let c_reg = 0.0001;
        for _ in 0..20 {
            let grads: Vec<f64> = params.theta().iter().map(|t| 2.0 * c_reg * t).collect();
            let theta: Vec<f64> = params.theta().iter().zip(&grads).map(|(t, g)| t - lr * g).collect();
            params.set_theta(&theta);
            let norm = params.squared_norm();
            assert!(norm <= last);
            last = norm;
        }
    }

    #[test]
    fn fixed_batch_loss_decreases() {
        let env = Problem::Mis.env();
        let mut rng = stream_rng(11, 0);
        let graphs: Vec<Graph> =
            (0..4).map(|i| crate::generators::generate(&crate::generators::GenSpec::er(8, 0.3, i)).unwrap()).collect();
        let trajs: Vec<Trajectory> = graphs
            .iter()
            .map(|g| generate_selfplay(env, g, &UniformStub, &MctsConfig::default(), &mut rng, 1).unwrap())
            .collect();
        let records: Vec<&TrajectoryRecord> = trajs.iter().flat_map(|t| &t.records).take(16).collect();
        let batch: Vec<Example> =
            records.iter().map(|r| Example { state: &r.state, action: r.action.index(Problem::Mis), pi: &r.pi, z: r.z }).collect();
        let mut decreased = 0;
        for seed in 0..20 {
            let mut params = Params::for_problem(ModelKind::Gcn, Problem::Mis, seed).unwrap();
            let mut adam = Adam::new(params.weights.len(), 0.001);
            let first = loss_and_gradients(&params, env, &batch, 1e-4).unwrap().loss;
            for _ in 0..50 {
                let g = loss_and_gradients(&params, env, &batch, 1e-4).unwrap();
                adam.step(&mut params, &g.grads);
            }
            let last = loss_and_gradients(&params, env, &batch, 1e-4).unwrap().loss;
            decreased += (last < first) as usize;
        }
        assert!(decreased >= 19, "{decreased}");
    }

    /// Always picks the lowest-index action, or the highest.
    struct Fixed(bool);
    impl PolicyValue for Fixed {
        fn evaluate(&self, env: &dyn Environment, s: &State) -> Result<NetworkOutput> {
            let k = env.num_actions(s);
            let mut p = vec![0.0; k];
            p[if self.0 { 0 } else { k - 1 }] = 1.0;
            Ok(NetworkOutput { p, v: vec![0.0; k] })
        }
    }

    #[test]
    fn evaluator_requires_strict_improvement() {
        // star with centre 0: taking node 0 first covers it in one step
        let star = Graph::star(4);
        let instances = vec![star; 5];
        let e = evaluate_on(Problem::Mvc, &Fixed(false), &Fixed(true), &instances).unwrap();
        assert!(e.candidate_wins && e.candidate_mean == 1.0);
        let e = evaluate_on(Problem::Mvc, &Fixed(true), &Fixed(true), &instances).unwrap();
        assert!(!e.candidate_wins);
        let p = Params::for_problem(ModelKind::S2v, Problem::Mvc, 4).unwrap();
        let e = evaluate_on(Problem::Mvc, &p, &p.clone(), &instances).unwrap();
        assert!(!e.candidate_wins);
    }

    fn tiny_config() -> TrainConfig {
        let mut cfg = TrainConfig::new(Problem::Mvc, ModelKind::Gcn);
        cfg.seed = 7;
        cfg.distribution = Some(ErDistribution { min_n: 6, max_n: 8, p: 0.3 });
        cfg.max_rounds = 4;
        cfg.rounds_per_candidate = 2;
        cfg.eval_instances = 4;
        cfg.episodes_per_round = 2;
        cfg.trajectories_per_round = 4;
        cfg
    }

    #[test]
    fn zero_budget_returns_initial_model() {
        let mut cfg = tiny_config();
        cfg.max_rounds = 0;
        let out = train(&cfg).unwrap();
        assert_eq!(out.best, Params::init(cfg.model, cfg.dims(), cfg.seed).unwrap());
        assert!(out.metrics.is_empty());
    }

    #[test]
    fn round_robin_training_is_deterministic() {
        let cfg = tiny_config();
        let a = train(&cfg).unwrap();
        let b = train(&cfg).unwrap();
        assert_eq!(metrics_to_jsonl(&a.metrics), metrics_to_jsonl(&b.metrics));
        assert_eq!(a.best, b.best);
        assert_eq!(a.rounds, 4);
        assert!(a.metrics.iter().any(|e| e.event == "evaluation"));
    }

    #[test]
    fn threaded_training_runs() {
        let mut cfg = tiny_config();
        cfg.single_thread = false;
        cfg.generators = 2;
        let out = train(&cfg).unwrap();
        assert!(out.rounds >= cfg.max_rounds);
        assert!(out.metrics.iter().any(|e| e.role == Role::Generator));
    }
}
