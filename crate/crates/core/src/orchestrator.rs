//! Central trainer and per-cell executors in one process.
//!
//! Executors act on an immutable [`PolicySnapshot`] that the trainer republishes
//! every `broadcast_period` steps; experiences from all cells are ingested into
//! one replay buffer in `(tti, cell)` order. A training step is one TTI of the
//! environment followed by at most one gradient update.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use log::{debug, info};
use rand::Rng;
use sha2::{Digest, Sha256};

use crate::drl::{
    add_gaussian_noise, agent_for_config, checkpoint, epsilon_greedy_act, thompson_select, EnsembleAgent, Mlp,
    ReplayBuffer, TrainStats,
};
use crate::env::{Env, RawAction, TtiMetrics};
use crate::netmodel::{Exploration, SimConfig};
use crate::rng::{self, Stream};
use crate::{Error, Result};

/// Read-only copy of the actor ensemble published to executors.
#[derive(Debug)]
pub struct PolicySnapshot {
    pub version: u64,
    pub hash: String,
    pub actors: Vec<Mlp>,
}

/// SHA-256 over the little-endian bytes of every actor parameter.
pub fn actors_hash(actors: &[Mlp]) -> String {
    let mut h = Sha256::new();
    for a in actors {
        for t in a.param_slices() {
            for x in t {
                h.update(x.to_le_bytes());
            }
        }
    }
    hex::encode(h.finalize())
}

impl PolicySnapshot {
    pub fn publish(agent: &EnsembleAgent, version: u64) -> Arc<Self> {
        Arc::new(PolicySnapshot { version, hash: actors_hash(&agent.actors), actors: agent.actors.clone() })
    }

    pub fn act(&self, j: usize, state: &[f64]) -> Vec<f64> {
        let x = ndarray::ArrayView2::from_shape((1, state.len()), state).expect("state row");
        self.actors[j].forward(x).into_raw_vec_and_offset().0
    }
}

/// Near-real-time agent of one cell.
#[derive(Debug)]
pub struct Executor {
    pub cell: usize,
    pub snapshot: Arc<PolicySnapshot>,
    pub actor: usize,
    rng: Stream,
}

impl Executor {
    fn act(&mut self, state: &[f64], cfg: &SimConfig, sigma: f64) -> Vec<f64> {
        let mut a = self.snapshot.act(self.actor, state);
        add_gaussian_noise(&mut a, sigma, &mut self.rng);
        match cfg.learning.exploration {
            Exploration::Thompson => a,
            Exploration::EpsilonGreedy => epsilon_greedy_act(a, cfg.learning.epsilon, &mut self.rng),
        }
    }
}

/// Order in which experiences reached the replay buffer.
#[derive(Debug, Clone, Default)]
pub struct IngestLog {
    pub entries: Vec<(u64, usize)>,
}

/// Column layout of the training metrics CSV.
pub fn metrics_header(wall_clock: bool) -> String {
    let mut h = String::from(
        "step,episode,tti,cell,phi_load,embb_sum_rate_bps,urllc_delivered_bits,urllc_demand_bits,violation_flag,psi,dual_phi,reward",
    );
    if wall_clock {
        h.push_str(",wall_clock_s");
    }
    h
}

struct MetricsSink {
    out: BufWriter<File>,
    pending: usize,
    flush_every: usize,
}

/// Everything a training run owns.
pub struct TrainRun {
    pub cfg: SimConfig,
    pub seed: u64,
    pub env: Env,
    pub agent: EnsembleAgent,
    pub replay: ReplayBuffer,
    pub executors: Vec<Executor>,
    pub snapshot: Arc<PolicySnapshot>,
    /// Hashes of every published snapshot, in order.
    pub published: Vec<String>,
    pub ingest: IngestLog,
    pub step: u64,
    pub episode: u64,
    pub updates: u64,
    pub last_stats: Option<TrainStats>,
    /// Mean reward over the cell-TTIs of the last finished episode.
    pub last_episode_reward: f64,
    episode_reward: (f64, u64),
    phi_load: f64,
    load_rng: Stream,
    thompson_rng: Stream,
    mask_rng: Stream,
    sample_rng: Stream,
    out_dir: Option<PathBuf>,
    sink: Option<MetricsSink>,
    started: Instant,
}

impl fmt::Debug for TrainRun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TrainRun").field("step", &self.step).field("episode", &self.episode).finish_non_exhaustive()
    }
}

/// Summary returned by [`run_training`].
#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub steps: u64,
    pub episodes: u64,
    pub updates: u64,
    pub experiences: u64,
    pub final_checkpoint: Option<PathBuf>,
    pub metrics_csv: Option<PathBuf>,
    pub mean_reward_last_episode: f64,
}

impl TrainRun {
    /// Sets up a run; with `out_dir` it also writes the resolved config and the
    /// metrics header.
    pub fn new(cfg: SimConfig, seed: u64, out_dir: Option<&Path>) -> Result<Self> {
        let cfg = cfg.validate()?;
        let agent = agent_for_config(&cfg, seed);
        let snapshot = PolicySnapshot::publish(&agent, 0);
        let shape = agent.shape;
        let replay = ReplayBuffer::new(
            cfg.learning.replay_capacity,
            shape.state_dim,
            shape.action_dim,
            shape.ensemble,
            cfg.learning.mask_prob,
        );
        let executors = (0..cfg.num_cells())
            .map(|k| Executor {
                cell: k,
                snapshot: Arc::clone(&snapshot),
                actor: 0,
                rng: rng::substream(seed, rng::tag::EXPLORATION, k as u64),
            })
            .collect();
        let sink = match out_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                cfg.save(dir.join("config.toml"))?;
                let path = dir.join("metrics.csv");
                let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
                let mut out = BufWriter::new(file);
                writeln!(out, "# config_hash={}", cfg.hash()).map_err(|e| Error::io(&path, e))?;
                writeln!(out, "{}", metrics_header(cfg.run.record_wall_clock)).map_err(|e| Error::io(&path, e))?;
                Some(MetricsSink { out, pending: 0, flush_every: cfg.run.metrics_flush_every.max(1) as usize })
            }
            None => None,
        };
        let mut run = TrainRun {
            env: Env::new(cfg.clone(), seed),
            agent,
            replay,
            executors,
            published: vec![snapshot.hash.clone()],
            snapshot,
            ingest: IngestLog::default(),
            step: 0,
            episode: 0,
            updates: 0,
            last_stats: None,
            last_episode_reward: 0.0,
            episode_reward: (0.0, 0),
            phi_load: 0.0,
            load_rng: rng::stream(seed, rng::tag::LOAD),
            thompson_rng: rng::stream(seed, rng::tag::THOMPSON),
            mask_rng: rng::stream(seed, rng::tag::REPLAY_MASK),
            sample_rng: rng::stream(seed, rng::tag::REPLAY_SAMPLE),
            out_dir: out_dir.map(Path::to_path_buf),
            sink,
            started: Instant::now(),
            seed,
            cfg,
        };
        run.start_episode()?;
        Ok(run)
    }

    fn start_episode(&mut self) -> Result<()> {
        let l = &self.cfg.learning;
        self.phi_load = if l.train_phi_max > l.train_phi_min {
            self.load_rng.random_range(l.train_phi_min..=l.train_phi_max)
        } else {
            l.train_phi_min
        };
        self.env.reset(self.phi_load)?;
        let n = self.agent.ensemble_len();
        for e in &mut self.executors {
            e.actor = thompson_select(n, &mut self.thompson_rng);
        }
        debug!("episode {} starts with load {:.2}", self.episode, self.phi_load);
        Ok(())
    }

    /// Exploration noise at the current step: linear decay to zero.
    pub fn noise_sigma(&self) -> f64 {
        let l = &self.cfg.learning;
        let frac = if l.noise_decay_steps == 0 { 1.0 } else { self.step as f64 / l.noise_decay_steps as f64 };
        l.exploration_noise * (1.0 - frac).max(0.0)
    }

    fn publish(&mut self) {
        let snap = PolicySnapshot::publish(&self.agent, self.updates);
        self.published.push(snap.hash.clone());
        for e in &mut self.executors {
            e.snapshot = Arc::clone(&snap);
        }
        self.snapshot = snap;
    }

    fn write_metrics(&mut self, rows: &[TtiMetrics]) -> Result<()> {
        let Some(sink) = self.sink.as_mut() else { return Ok(()) };
        let path = self.out_dir.as_ref().expect("sink implies out dir").join("metrics.csv");
        for m in rows {
            let mut line = format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                self.step,
                self.episode,
                m.tti,
                m.cell,
                self.phi_load,
                m.embb_sum_rate_bps,
                m.urllc_delivered_bits,
                m.urllc_demand_bits,
                u8::from(m.violation),
                m.psi,
                m.dual_weight,
                m.reward
            );
            if self.cfg.run.record_wall_clock {
                line.push_str(&format!(",{:.6}", self.started.elapsed().as_secs_f64()));
            }
            writeln!(sink.out, "{line}").map_err(|e| Error::io(&path, e))?;
        }
        sink.pending += 1;
        if sink.pending >= sink.flush_every {
            sink.out.flush().map_err(|e| Error::io(&path, e))?;
            sink.pending = 0;
        }
        Ok(())
    }

    fn dump_divergence(&self, detail: &str) {
        let Some(dir) = &self.out_dir else { return };
        let text = format!(
            "step={}\nepisode={}\nupdates={}\ndetail={detail}\nlast_stats={:?}\nconfig_hash={}\n",
            self.step,
            self.episode,
            self.updates,
            self.last_stats,
            self.cfg.hash()
        );
        let _ = std::fs::write(dir.join("diverged.txt"), text);
    }

    /// One TTI for every cell, ingestion, and one update once the buffer is warm.
    pub fn step_once(&mut self) -> Result<()> {
        let sigma = self.noise_sigma();
        let states = self.env.states().to_vec();
        let actions: Vec<RawAction> = self
            .executors
            .iter_mut()
            .zip(&states)
            .map(|(e, s)| RawAction(e.act(s.as_slice(), &self.cfg, sigma)))
            .collect();
        let out = self.env.step(&actions)?;
        let mut exps = out.experiences;
        exps.sort_by_key(|e| (e.tti, e.cell));
        for e in &exps {
            self.replay.push(e, &mut self.mask_rng)?;
            self.ingest.entries.push((e.tti, e.cell));
        }
        self.write_metrics(&out.metrics)?;
        for m in &out.metrics {
            self.episode_reward.0 += m.reward;
            self.episode_reward.1 += 1;
        }

        if self.replay.len() as u64 >= self.cfg.learning.warmup_steps.max(1) {
            let batch = self.replay.sample(self.cfg.learning.batch_size, &mut self.sample_rng)?;
            let stats = self.agent.train_step(&batch);
            self.updates += 1;
            let finite = stats.critic_loss.is_finite() && stats.actor_q.iter().flatten().all(|q| q.is_finite());
            self.last_stats = Some(stats);
            if !finite || !self.agent.is_finite() {
                let detail = format!("non-finite loss or parameters after update {}", self.updates);
                self.dump_divergence(&detail);
                return Err(Error::Diverged { step: self.step, detail });
            }
        }
        self.step += 1;
        if self.step % self.cfg.learning.broadcast_period.max(1) as u64 == 0 {
            self.publish();
        }
        if let Some(dir) = &self.out_dir {
            let every = self.cfg.run.checkpoint_every;
            if every > 0 && self.step % every == 0 {
                checkpoint::save(dir.join(format!("checkpoint_{:08}.bin", self.step)), &self.agent, &self.cfg)?;
            }
        }
        if out.done {
            self.last_episode_reward = self.episode_reward.0 / self.episode_reward.1.max(1) as f64;
            self.episode_reward = (0.0, 0);
            self.episode += 1;
            self.start_episode()?;
        }
        Ok(())
    }

    /// Runs `steps` steps, then writes the final checkpoint when an output directory is set.
    pub fn run(&mut self, steps: u64) -> Result<TrainSummary> {
        for _ in 0..steps {
            self.step_once()?;
            if self.step % 5000 == 0 {
                info!(
                    "step {} episode {} updates {} critic_loss {:.4e}",
                    self.step,
                    self.episode,
                    self.updates,
                    self.last_stats.as_ref().map_or(f64::NAN, |s| s.critic_loss)
                );
            }
        }
        let mut final_checkpoint = None;
        let mut metrics_csv = None;
        if let Some(dir) = self.out_dir.clone() {
            let path = dir.join("checkpoint.bin");
            checkpoint::save(&path, &self.agent, &self.cfg)?;
            final_checkpoint = Some(path);
            if let Some(sink) = self.sink.as_mut() {
                sink.out.flush().map_err(|e| Error::io(dir.join("metrics.csv"), e))?;
            }
            metrics_csv = Some(dir.join("metrics.csv"));
        }
        Ok(TrainSummary {
            steps: self.step,
            episodes: self.episode,
            updates: self.updates,
            experiences: self.ingest.entries.len() as u64,
            final_checkpoint,
            metrics_csv,
            mean_reward_last_episode: self.last_episode_reward,
        })
    }
}

/// Trains for `cfg.run.train_steps` steps.
pub fn run_training(cfg: &SimConfig, seed: u64, out_dir: Option<&Path>) -> Result<(EnsembleAgent, TrainSummary)> {
    let mut run = TrainRun::new(cfg.clone(), seed, out_dir)?;
    let summary = run.run(cfg.run.train_steps)?;
    Ok((run.agent, summary))
}

/// How actions are chosen during evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalPolicy {
    /// Greedy actor drawn uniformly per episode and cell.
    Thompson,
    /// Uniform random action with the given probability, otherwise greedy actor 0.
    Epsilon(f64),
    /// Uniform random actions.
    Random,
    /// Greedy fixed actor.
    Actor(usize),
}

impl FromStr for EvalPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "thompson" => Ok(EvalPolicy::Thompson),
            "random" => Ok(EvalPolicy::Random),
            _ => {
                if let Some(v) = s.strip_prefix("eps:") {
                    let eps: f64 = v.parse().map_err(|_| Error::ConfigParse(format!("bad epsilon in '{s}'")))?;
                    if !(0.0..=1.0).contains(&eps) {
                        return Err(Error::ConfigParse(format!("epsilon {eps} outside [0, 1]")));
                    }
                    Ok(EvalPolicy::Epsilon(eps))
                } else if let Some(v) = s.strip_prefix("actor:") {
                    v.parse().map(EvalPolicy::Actor).map_err(|_| Error::ConfigParse(format!("bad actor in '{s}'")))
                } else {
                    Err(Error::ConfigParse(format!("unknown method '{s}' (thompson, eps:<value>, random)")))
                }
            }
        }
    }
}

impl fmt::Display for EvalPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalPolicy::Thompson => write!(f, "thompson"),
            EvalPolicy::Epsilon(e) => write!(f, "eps:{e}"),
            EvalPolicy::Random => write!(f, "random"),
            EvalPolicy::Actor(j) => write!(f, "actor:{j}"),
        }
    }
}

/// Aggregates of an evaluation at one load.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub policy: EvalPolicy,
    pub phi: f64,
    pub episodes: usize,
    /// Mean per-cell eMBB sum rate over all evaluated cell-TTIs, bit/s.
    pub mean_embb_rate_bps: f64,
    /// Fraction of cell-TTIs whose URLLC demand was not fully delivered.
    pub mean_outage: f64,
    pub mean_reward: f64,
    /// Empirical URLLC error probability of each full window of `eval_window_ttis` TTIs
    /// per cell, concatenated across episodes: the fraction of TTIs with undelivered demand.
    pub window_errors: Vec<f64>,
    /// Packet loss rate (lost / arrived) of the same windows.
    pub window_packet_loss: Vec<f64>,
    /// Share of windows whose error probability is within the outage target.
    pub fraction_windows_within: f64,
}

/// Noise-free rollouts of `agent` at load `phi`.
pub fn run_evaluation(
    agent: &EnsembleAgent,
    cfg: &SimConfig,
    policy: EvalPolicy,
    phi: f64,
    episodes: usize,
    seed: u64,
) -> Result<EvalReport> {
    if let EvalPolicy::Actor(j) = policy {
        if j >= agent.ensemble_len() {
            return Err(Error::Shape(format!("actor {j} of an ensemble of {}", agent.ensemble_len())));
        }
    }
    let k_n = cfg.num_cells();
    let mut env = Env::new(cfg.clone(), seed);
    let mut pick = rng::stream(seed, rng::tag::THOMPSON);
    let mut explore = rng::stream(seed, rng::tag::EXPLORATION);
    let action_dim = agent.shape.action_dim;
    let (mut embb, mut reward, mut outages, mut n) = (0.0, 0.0, 0u64, 0u64);
    let window = cfg.traffic.eval_window_ttis.max(1);
    let mut window_errors = Vec::new();
    let mut window_packet_loss = Vec::new();
    let mut per_cell: Vec<Vec<(u64, u64, bool)>> = vec![Vec::new(); k_n];
    for _ in 0..episodes {
        let mut states = env.reset(phi)?;
        let actors: Vec<usize> = (0..k_n).map(|_| thompson_select(agent.ensemble_len(), &mut pick)).collect();
        loop {
            let actions: Vec<RawAction> = (0..k_n)
                .map(|k| {
                    let s = states[k].as_slice();
                    RawAction(match policy {
                        EvalPolicy::Thompson => agent.act(s, actors[k]),
                        EvalPolicy::Actor(j) => agent.act(s, j),
                        EvalPolicy::Epsilon(eps) => epsilon_greedy_act(agent.act(s, 0), eps, &mut explore),
                        EvalPolicy::Random => (0..action_dim).map(|_| explore.random_range(-1.0..=1.0)).collect(),
                    })
                })
                .collect();
            let out = env.step(&actions)?;
            for m in &out.metrics {
                embb += m.embb_sum_rate_bps;
                reward += m.reward;
                outages += u64::from(m.violation);
                n += 1;
                per_cell[m.cell].push((m.arrived_packets, m.lost_packets, m.violation));
            }
            states = out.next_states;
            if out.done {
                break;
            }
        }
    }
    for rows in &per_cell {
        for chunk in rows.chunks_exact(window) {
            let arrived: u64 = chunk.iter().map(|r| r.0).sum();
            let lost: u64 = chunk.iter().map(|r| r.1).sum();
            let violations = chunk.iter().filter(|r| r.2).count();
            window_errors.push(violations as f64 / chunk.len() as f64);
            window_packet_loss.push(if arrived == 0 { 0.0 } else { lost as f64 / arrived as f64 });
        }
    }
    let n_f = n.max(1) as f64;
    let target = cfg.traffic.outage_target;
    let within = window_errors.iter().filter(|&&e| e <= target).count();
    Ok(EvalReport {
        policy,
        phi,
        episodes,
        mean_embb_rate_bps: embb / n_f,
        mean_outage: outages as f64 / n_f,
        mean_reward: reward / n_f,
        fraction_windows_within: if window_errors.is_empty() { 1.0 } else { within as f64 / window_errors.len() as f64 },
        window_errors,
        window_packet_loss,
    })
}

/// Loads a checkpoint and evaluates it.
pub fn evaluate_checkpoint(
    path: impl AsRef<Path>,
    cfg: &SimConfig,
    policy: EvalPolicy,
    phi: f64,
    episodes: usize,
    seed: u64,
) -> Result<EvalReport> {
    let agent = checkpoint::load(path, cfg, false)?;
    run_evaluation(&agent, cfg, policy, phi, episodes, seed)
}
