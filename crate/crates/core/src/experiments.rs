//! Command-level drivers behind the `orsched` binary and shared experiment helpers.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use rand::Rng;

use crate::channel::{draw_channel, ChannelRealization, UserPlacement};
use crate::drl::{checkpoint, Activation, Mlp};
use crate::env::{
    decode_action, evaluate_single_cell, solve_tiny_oracle, ActionLayout, DecisionValue, DecodeOptions, LinkEstimate,
    OracleSolution, RawAction,
};
use crate::harq::{HarqEvent, HarqLedger};
use crate::netmodel::{Exploration, SimConfig};
use crate::orchestrator::{run_evaluation, run_training, EvalPolicy, EvalReport};
use crate::phyrates::{decode_error_prob, urllc_rb_rate};
use crate::rng::{self, Stream};
use crate::{Error, Result};

/// Failure of a command, split by exit code.
#[derive(Debug)]
pub enum CmdFailure {
    /// Bad arguments, unreadable or invalid configuration (exit 2).
    Usage(Error),
    /// Anything that fails after the inputs were accepted (exit 1).
    Runtime(Error),
}

impl CmdFailure {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdFailure::Usage(_) => 2,
            CmdFailure::Runtime(_) => 1,
        }
    }

    pub fn error(&self) -> &Error {
        match self {
            CmdFailure::Usage(e) | CmdFailure::Runtime(e) => e,
        }
    }
}

impl std::fmt::Display for CmdFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.error().fmt(f)
    }
}

pub type CmdResult<T = ()> = std::result::Result<T, CmdFailure>;

fn usage<T>(r: Result<T>) -> CmdResult<T> {
    r.map_err(CmdFailure::Usage)
}

fn runtime<T>(r: Result<T>) -> CmdResult<T> {
    r.map_err(CmdFailure::Runtime)
}

/// Installs the logger; verbosity comes from `ORSCHED_LOG` (default `info`).
pub fn init_logging() {
    let env = env_logger::Env::default().filter_or("ORSCHED_LOG", "info");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Two cells with twelve RBs and four users of each class, sized to train on one CPU core.
pub fn desk_config() -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.network.num_cells = 2;
    cfg.network.embb_users_per_cell = 4;
    cfg.network.urllc_users_per_cell = 4;
    cfg.radio.num_rbs = 12;
    cfg.traffic.urllc_packet_bits = 32;
    cfg.learning.hidden_width = 64;
    cfg.learning.batch_size = 32;
    cfg.learning.replay_capacity = 100_000;
    cfg.learning.warmup_steps = 500;
    cfg.learning.train_phi_min = 20.0;
    cfg.learning.train_phi_max = 120.0;
    cfg.run.train_steps = 50_000;
    cfg.run.episode_len_ttis = 50;
    cfg
}

/// The configuration of an ε-greedy baseline trained alongside the ensemble.
pub fn epsilon_baseline(cfg: &SimConfig, eps: f64) -> SimConfig {
    let mut c = cfg.clone();
    c.learning.exploration = Exploration::EpsilonGreedy;
    c.learning.epsilon = eps;
    c
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Config next to a checkpoint when none is given explicitly.
fn resolve_config(checkpoint: &Path, config: Option<&Path>) -> PathBuf {
    match config {
        Some(c) => c.to_path_buf(),
        None => checkpoint.parent().unwrap_or(Path::new(".")).join("config.toml"),
    }
}

/// Trains from a config file and writes `checkpoint.bin`, `metrics.csv` and `config.toml` into `out`.
pub fn cmd_train(config: &Path, seed: Option<u64>, steps: Option<u64>, out: &Path) -> CmdResult {
    let mut cfg = usage(SimConfig::load(config))?;
    if let Some(s) = steps {
        cfg.run.train_steps = s;
    }
    let seed = seed.unwrap_or(cfg.run.rng_seed);
    cfg.run.rng_seed = seed;
    info!("training {} steps, seed {seed}, config hash {}", cfg.run.train_steps, cfg.hash());
    let (_, summary) = runtime(run_training(&cfg, seed, Some(out)))?;
    info!(
        "done: {} steps, {} episodes, {} updates, {} experiences",
        summary.steps, summary.episodes, summary.updates, summary.experiences
    );
    Ok(())
}

/// Rows `(phi, mean_embb_rate_bps, mean_outage, method)` for every load and method.
pub fn sweep_rows(
    agent_for: &mut dyn FnMut(EvalPolicy) -> Result<crate::drl::EnsembleAgent>,
    cfg: &SimConfig,
    phis: &[f64],
    methods: &[EvalPolicy],
    episodes: usize,
    seed: u64,
) -> Result<Vec<EvalReport>> {
    let mut out = Vec::new();
    for &m in methods {
        let agent = agent_for(m)?;
        for &phi in phis {
            out.push(run_evaluation(&agent, cfg, m, phi, episodes, seed)?);
        }
    }
    Ok(out)
}

pub fn sweep_csv(cfg: &SimConfig, reports: &[EvalReport]) -> String {
    let mut s = format!("# config_hash={}\nphi,mean_embb_rate_bps,mean_outage,method\n", cfg.hash());
    for r in reports {
        let _ = writeln!(s, "{},{},{},{}", r.phi, r.mean_embb_rate_bps, r.mean_outage, r.policy);
    }
    s
}

/// Evaluates a checkpoint over a list of loads.
pub fn cmd_sweep_load(
    checkpoint_path: &Path,
    config: Option<&Path>,
    phis: &[f64],
    methods: &[EvalPolicy],
    episodes: usize,
    seed: u64,
    out: &Path,
) -> CmdResult {
    if phis.is_empty() || methods.is_empty() || episodes == 0 {
        return Err(CmdFailure::Usage(Error::ConfigParse("need at least one load, method and episode".into())));
    }
    if let Some(bad) = phis.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
        return Err(CmdFailure::Usage(Error::ConfigParse(format!("load {bad} must be finite and non-negative"))));
    }
    let cfg = usage(SimConfig::load(resolve_config(checkpoint_path, config)))?;
    if !checkpoint_path.exists() {
        return Err(CmdFailure::Usage(Error::io(checkpoint_path, std::io::ErrorKind::NotFound.into())));
    }
    let agent = runtime(checkpoint::load(checkpoint_path, &cfg, false))?;
    let reports = runtime(sweep_rows(&mut |_| Ok(agent.clone()), &cfg, phis, methods, episodes, seed))?;
    for r in &reports {
        info!("phi {:>6.1} {:<10} embb {:.4e} bit/s outage {:.4}", r.phi, r.policy.to_string(), r.mean_embb_rate_bps, r.mean_outage);
    }
    runtime(write_text(out, &sweep_csv(&cfg, &reports)))
}

/// Sorted samples with their empirical CDF.
pub fn cdf_rows(samples: &[f64]) -> Vec<(f64, f64)> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.into_iter().enumerate().map(|(i, x)| (x, (i + 1) as f64 / n)).collect()
}

pub fn cdf_csv(cfg: &SimConfig, report: &EvalReport) -> String {
    let mut s = format!(
        "# config_hash={}\n# phi={} method={} fraction_windows_within={}\nvalue,cum_fraction\n",
        cfg.hash(),
        report.phi,
        report.policy,
        report.fraction_windows_within
    );
    for (x, c) in cdf_rows(&report.window_errors) {
        let _ = writeln!(s, "{x},{c}");
    }
    s
}

/// Per-window URLLC error-rate samples at one load and their CDF.
pub fn cmd_cdf_error(
    checkpoint_path: &Path,
    config: Option<&Path>,
    phi: f64,
    method: EvalPolicy,
    episodes: usize,
    seed: u64,
    out: &Path,
) -> CmdResult {
    if episodes == 0 || !(phi >= 0.0 && phi.is_finite()) {
        return Err(CmdFailure::Usage(Error::ConfigParse("need a non-negative load and at least one episode".into())));
    }
    let cfg = usage(SimConfig::load(resolve_config(checkpoint_path, config)))?;
    if !checkpoint_path.exists() {
        return Err(CmdFailure::Usage(Error::io(checkpoint_path, std::io::ErrorKind::NotFound.into())));
    }
    let agent = runtime(checkpoint::load(checkpoint_path, &cfg, false))?;
    let report = runtime(run_evaluation(&agent, &cfg, method, phi, episodes, seed))?;
    info!(
        "phi {phi}: {} windows, {:.2}% within the outage target {}",
        report.window_errors.len(),
        100.0 * report.fraction_windows_within,
        cfg.traffic.outage_target
    );
    runtime(write_text(out, &cdf_csv(&cfg, &report)))
}

/// Scenario used for exhaustive-search comparisons.
pub fn tiny_config() -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.network.num_cells = 1;
    cfg.network.embb_users_per_cell = 2;
    cfg.network.urllc_users_per_cell = 1;
    cfg.radio.num_rbs = 3;
    cfg.radio.minislots_per_tti = 3;
    cfg.radio.symbols_per_tti = 3 * cfg.radio.symbols_per_minislot;
    cfg
}

/// A random tiny instance: channel draw and URLLC demand in packets.
pub fn tiny_instance(cfg: &SimConfig, rng: &mut Stream) -> (ChannelRealization, u64) {
    let placement = UserPlacement::random(cfg, rng);
    let chan = draw_channel(&placement, cfg, 0, rng);
    (chan, rng.random_range(0..=4))
}

/// Oracle and best decoded value over `samples` uniform raw actions.
#[derive(Debug, Clone)]
pub struct OracleComparison {
    pub oracle: OracleSolution,
    pub best_decoded: DecisionValue,
    /// Decoded decisions that would beat the oracle (must be zero).
    pub exceeded: usize,
}

impl OracleComparison {
    /// Decoded eMBB objective relative to the oracle's (1 when both are zero).
    pub fn ratio(&self) -> f64 {
        if self.best_decoded.delivered < self.oracle.value.delivered {
            return 0.0;
        }
        if self.oracle.value.embb_bps <= 0.0 {
            return 1.0;
        }
        self.best_decoded.embb_bps / self.oracle.value.embb_bps
    }
}

pub const TINY_POWER_LEVELS: usize = 4;

pub fn compare_with_oracle(
    cfg: &SimConfig,
    chan: &ChannelRealization,
    demand: u64,
    samples: usize,
    rng: &mut Stream,
) -> Result<OracleComparison> {
    let oracle = solve_tiny_oracle(chan, cfg, demand, TINY_POWER_LEVELS)?;
    let layout = ActionLayout::new(cfg);
    let link = LinkEstimate::nominal(chan, cfg, 0);
    let opts = DecodeOptions { power_levels: Some(TINY_POWER_LEVELS) };
    let mut best = DecisionValue { embb_bps: f64::NEG_INFINITY, delivered: 0 };
    let mut exceeded = 0;
    let tol = 1e-9 * oracle.value.embb_bps.max(1.0);
    for _ in 0..samples {
        let raw = RawAction((0..layout.len()).map(|_| rng.random_range(-1.0..=1.0)).collect());
        let d = decode_action(&raw, demand, &link, cfg, 0, 0, &opts)?;
        let v = evaluate_single_cell(&d, chan, cfg, demand)?;
        let o = &oracle.value;
        if v.delivered > o.delivered || (v.delivered == o.delivered && v.embb_bps > o.embb_bps + tol) {
            exceeded += 1;
        }
        if v.better_than(&best) {
            best = v;
        }
    }
    Ok(OracleComparison { oracle, best_decoded: best, exceeded })
}

/// Largest relative error between analytic and central-difference gradients of
/// `sum(c * net(x))` for a random net, input and weighting.
pub fn gradient_check(rng: &mut Stream) -> f64 {
    let depth = rng.random_range(1..=3);
    let mut sizes = vec![rng.random_range(1..=6)];
    for _ in 0..depth {
        sizes.push(rng.random_range(1..=8));
    }
    let hidden = if rng.random_bool(0.5) { Activation::Tanh } else { Activation::Relu };
    let output = if rng.random_bool(0.5) { Activation::Tanh } else { Activation::Identity };
    let mut net = Mlp::new(&sizes, hidden, output, 0.5, rng);
    let rows = rng.random_range(1..=4);
    let x = ndarray::Array2::from_shape_simple_fn((rows, sizes[0]), || rng.random_range(-1.0..1.0));
    let c = ndarray::Array2::from_shape_simple_fn((rows, *sizes.last().expect("sizes")), || rng.random_range(-1.0..1.0));
    let f = |n: &Mlp| (n.forward(x.view()) * &c).sum();
    let (grads, _) = net.backward(&net.forward_cached(x.view()), &c);
    let analytic = grads.slices().concat();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut idx = 0;
    for t in 0..net.param_slices().len() {
        for j in 0..net.param_slices()[t].len() {
            let orig = net.param_slices()[t][j];
            net.param_slices_mut()[t][j] = orig + h;
            let up = f(&net);
            net.param_slices_mut()[t][j] = orig - h;
            let down = f(&net);
            net.param_slices_mut()[t][j] = orig;
            let fd = (up - down) / (2.0 * h);
            // ReLU kinks make central differences meaningless; skip parameters whose
            // perturbation flips a unit (the one-sided slopes disagree).
            let one_sided = (up - f(&net)) / h - (f(&net) - down) / h;
            if hidden == Activation::Relu && one_sided.abs() > 1e-3 * fd.abs().max(1e-3) {
                idx += 1;
                continue;
            }
            let err = (fd - analytic[idx]).abs() / fd.abs().max(analytic[idx].abs()).max(1e-2);
            worst = worst.max(err);
            idx += 1;
        }
    }
    worst
}

/// A random valid scenario for decoder fuzzing.
pub fn random_config(rng: &mut Stream) -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.network.num_cells = rng.random_range(1..=3);
    cfg.network.embb_users_per_cell = rng.random_range(1..=5);
    cfg.network.urllc_users_per_cell = rng.random_range(1..=5);
    cfg.radio.num_rbs = rng.random_range(1..=16);
    let l = [1, 2, 7][rng.random_range(0..3)];
    cfg.radio.minislots_per_tti = l;
    cfg.radio.symbols_per_minislot = 14 / l;
    cfg.traffic.urllc_packet_bits = [32, 256][rng.random_range(0..2)];
    cfg.traffic.provisioning_margin = rng.random_range(0.5..3.0);
    cfg
}

/// Decodes `n` random raw actions across random scenarios and counts constraint violations.
pub fn fuzz_decoder(n: usize, rng: &mut Stream) -> Result<usize> {
    let mut violations = 0;
    let mut cfg = random_config(rng);
    let mut chan = ChannelRealization::uniform(&cfg, 0, 0.0);
    for i in 0..n {
        if i % 100 == 0 {
            cfg = random_config(rng);
            let placement = UserPlacement::random(&cfg, rng);
            chan = draw_channel(&placement, &cfg, 0, rng);
        }
        let layout = ActionLayout::new(&cfg);
        let k = rng.random_range(0..cfg.num_cells());
        let scale = [1.0, 5.0, 1e3][rng.random_range(0..3)];
        let raw = RawAction((0..layout.len()).map(|_| scale * rng.random_range(-1.0..=1.0)).collect());
        let demand = rng.random_range(0..200);
        let link = LinkEstimate::nominal(&chan, &cfg, k);
        let d = decode_action(&raw, demand, &link, &cfg, k, 0, &DecodeOptions::default())?;
        violations += d.violations(&cfg).len();
    }
    Ok(violations)
}

/// Terminal latency (mini-slots) of every block over `packets` single-packet blocks
/// decoded with error probability `eps` per attempt, plus the largest attempt count.
pub fn harq_latency_census(packets: usize, eps: f64, cfg: &SimConfig, rng: &mut Stream) -> (Vec<u64>, usize) {
    let mut ledger = HarqLedger::new(cfg);
    let mut latencies = Vec::with_capacity(packets);
    let mut max_attempts = 0;
    let mut slot = 0u64;
    let mut sent = 0;
    while sent < packets || ledger.in_flight() > 0 {
        let events = ledger.advance(slot, |_, _| Some(!rng.random_bool(eps)));
        for e in events {
            if let HarqEvent::Delivered { block, slot: s } | HarqEvent::Lost { block, slot: s } = e {
                latencies.push(s - block.first_slot);
                max_attempts = max_attempts.max(block.attempts());
            }
        }
        if sent < packets {
            let spec = crate::harq::BlockSpec {
                cell: 0,
                user: 0,
                origin_tti: slot / cfg.num_minislots() as u64,
                rbs: vec![0],
                packets: vec![sent as u64],
                bits: cfg.packet_bits(),
            };
            ledger.transmit(spec, slot, !rng.random_bool(eps));
            sent += 1;
        }
        slot += 1;
    }
    (latencies, max_attempts)
}

/// One line of the self-test table.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub fn selftest_checks() -> Vec<CheckResult> {
    let mut out = Vec::new();
    let mut push = |name, r: Result<(bool, String)>| {
        let (passed, detail) = r.unwrap_or_else(|e| (false, e.to_string()));
        out.push(CheckResult { name, passed, detail });
    };

    push("oracle comparison", (|| {
        let cfg = tiny_config();
        let mut r = rng::stream(11, rng::tag::PLACEMENT);
        let mut exceeded = 0;
        let mut ratio = 0.0;
        for _ in 0..5 {
            let (chan, demand) = tiny_instance(&cfg, &mut r);
            let c = compare_with_oracle(&cfg, &chan, demand, 2_000, &mut r)?;
            exceeded += c.exceeded;
            ratio += c.ratio() / 5.0;
        }
        Ok((exceeded == 0, format!("5 instances, mean ratio {ratio:.3}, {exceeded} decodes above oracle")))
    })());

    push("gradient check", (|| {
        let mut r = rng::stream(12, rng::tag::AGENT_INIT);
        let worst = (0..20).map(|_| gradient_check(&mut r)).fold(0.0, f64::max);
        Ok((worst <= 1e-4, format!("20 nets, worst relative error {worst:.2e}")))
    })());

    push("decoder fuzz", (|| {
        let mut r = rng::stream(13, rng::tag::EXPLORATION);
        let v = fuzz_decoder(10_000, &mut r)?;
        Ok((v == 0, format!("10000 actions, {v} violations")))
    })());

    push("error-rate round trip", (|| {
        let cfg = SimConfig::default();
        let mut r = rng::stream(14, rng::tag::CHANNEL);
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let chi = 10f64.powf(r.random_range(-0.5..3.0));
            let n = r.random_range(1..=7);
            let rate = urllc_rb_rate(chi, n, 1e-5, &cfg)?;
            if rate <= 0.0 {
                continue;
            }
            let w = n * cfg.radio.symbols_per_minislot * cfg.subcarriers_per_rb();
            let r_cu = rate / (cfg.radio.rb_bandwidth * n as f64 / cfg.num_minislots() as f64);
            worst = worst.max((decode_error_prob(chi, w, r_cu) - 1e-5).abs() / 1e-5);
        }
        Ok((worst <= 1e-8, format!("worst relative deviation {worst:.2e}")))
    })());

    push("HARQ timing", (|| {
        let cfg = SimConfig::default();
        let mut r = rng::stream(15, rng::tag::HARQ);
        let (lat, max_att) = harq_latency_census(20_000, 0.3, &cfg, &mut r);
        let ok = lat.iter().all(|&l| l == 5 || l == 6) && max_att <= 2;
        Ok((ok, format!("{} blocks, latencies within {{5, 6}}, at most {max_att} attempts", lat.len())))
    })());

    push("corrupted checkpoint", (|| {
        let mut cfg = desk_config();
        cfg.learning.hidden_width = 8;
        let agent = crate::drl::agent_for_config(&cfg, 1);
        let mut bytes = checkpoint::encode(&agent, &cfg);
        let i = bytes.len() / 3;
        bytes[i] ^= 0x40;
        match checkpoint::decode(&bytes, &cfg, false) {
            Err(Error::Checksum) => Ok((true, "checksum mismatch detected".to_string())),
            other => Ok((false, format!("unexpected outcome {:?}", other.map(|_| ())))),
        }
    })());
    out
}

/// Prints the self-test table and fails if any check fails.
pub fn cmd_selftest() -> CmdResult {
    let checks = selftest_checks();
    let mut failed = 0;
    for c in &checks {
        println!("{:<24} {}  {}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail);
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        return Err(CmdFailure::Runtime(Error::Domain(format!("{failed} self-test check(s) failed"))));
    }
    Ok(())
}
