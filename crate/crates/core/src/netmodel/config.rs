use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// 38 dBm.
const DEFAULT_P_MAX_W: f64 = 6.309_573_444_801_933;

/// Immutable scenario description.
///
/// The on-disk form is TOML with one table per section; every key maps 1:1 onto a
/// field below and unknown keys are rejected.
///
/// Distances in the pathloss model are in kilometres:
/// `PL(d) = pathloss_intercept_db + pathloss_slope_db * log10(d_km)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub network: NetworkConfig,
    pub radio: RadioConfig,
    pub traffic: TrafficConfig,
    pub harq: HarqConfig,
    pub learning: LearningConfig,
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub num_cells: usize,
    /// Side of the square coverage area of one BS, metres.
    pub cell_side: f64,
    pub embb_users_per_cell: usize,
    pub urllc_users_per_cell: usize,
    /// Users are never placed closer than this to their serving BS, metres.
    pub min_user_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fading {
    Rayleigh,
    PathlossOnly,
}

/// Transmit power used by a URLLC transmission on a punctured RB.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UrllcPower {
    /// Reuse the eMBB power already allocated to the punctured RB.
    ReuseEmbb,
    /// Fixed `p_max / num_rbs` per punctured RB.
    EqualShare,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioConfig {
    pub num_rbs: usize,
    pub rb_bandwidth: f64,
    pub subcarrier_spacing: f64,
    pub total_bandwidth: f64,
    pub minislots_per_tti: usize,
    pub symbols_per_minislot: usize,
    pub symbols_per_tti: usize,
    pub tti_duration: f64,
    pub minislot_duration: f64,
    /// Per-cell power budget, watts.
    pub p_max: f64,
    /// dBm/Hz.
    pub noise_psd: f64,
    /// dB.
    pub noise_figure: f64,
    pub pathloss_intercept_db: f64,
    pub pathloss_slope_db: f64,
    pub fading: Fading,
    pub urllc_power: UrllcPower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficConfig {
    /// Packet size, bits.
    pub urllc_packet_bits: u32,
    /// Mean URLLC packets per TTI per cell.
    pub arrival_rate: f64,
    pub outage_target: f64,
    /// Block error target used inside the finite-blocklength rate.
    pub decode_error_target: f64,
    /// Window of the sliding outage estimator, TTIs.
    pub outage_window: usize,
    /// Multiplier on the estimated number of cells to puncture.
    pub provisioning_margin: f64,
    /// Evaluation windows used for error-probability CDFs, TTIs.
    pub eval_window_ttis: usize,
    /// URLLC latency budget, seconds.
    pub latency_budget: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarqConfig {
    /// Feedback delay in mini-slots.
    pub harq_rtt: usize,
    pub max_harq_attempts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardVariant {
    /// Penalise only undelivered URLLC demand.
    Shortfall,
    /// `sum eMBB - phi * (delivered - demand)`, sign as printed.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exploration {
    /// Bootstrapped actor ensemble, one actor drawn per episode.
    Thompson,
    /// Single actor, uniform random action with probability `epsilon`.
    EpsilonGreedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearningConfig {
    pub discount: f64,
    pub soft_update: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub optimizer: OptimizerKind,
    pub exploration: Exploration,
    pub ensemble_size: usize,
    pub mask_prob: f64,
    pub epsilon: f64,
    /// Gaussian noise added to the active actor's output at the start of training.
    pub exploration_noise: f64,
    /// Noise decays linearly to zero over this many steps (0 keeps it constant).
    pub noise_decay_steps: u64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub warmup_steps: u64,
    pub hidden_width: usize,
    pub hidden_layers: usize,
    pub broadcast_period: u64,
    pub reward_variant: RewardVariant,
    pub initial_dual_weight: f64,
    /// Frozen state normalisation: gains are encoded as `(dB - mean) / std`.
    pub gain_db_mean: f64,
    pub gain_db_std: f64,
    /// Arrival counts are divided by this in the state.
    pub phi_norm: f64,
    /// Training draws the episode's arrival rate uniformly from this range.
    pub train_phi_min: f64,
    pub train_phi_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub episode_len_ttis: u64,
    pub rng_seed: u64,
    pub train_steps: u64,
    pub checkpoint_every: u64,
    pub metrics_flush_every: u64,
    pub record_wall_clock: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            network: NetworkConfig {
                num_cells: 4,
                cell_side: 250f64.sqrt(),
                embb_users_per_cell: 4,
                urllc_users_per_cell: 4,
                min_user_distance: 1.0,
            },
            radio: RadioConfig {
                num_rbs: 12,
                rb_bandwidth: 180e3,
                subcarrier_spacing: 15e3,
                total_bandwidth: 20e6,
                minislots_per_tti: 7,
                symbols_per_minislot: 2,
                symbols_per_tti: 14,
                tti_duration: 1e-3,
                minislot_duration: 0.143e-3,
                p_max: DEFAULT_P_MAX_W,
                noise_psd: -174.0,
                noise_figure: 7.0,
                pathloss_intercept_db: 120.8,
                pathloss_slope_db: 37.5,
                fading: Fading::Rayleigh,
                urllc_power: UrllcPower::ReuseEmbb,
            },
            traffic: TrafficConfig {
                urllc_packet_bits: 32 * 8,
                arrival_rate: 80.0,
                outage_target: 0.05,
                decode_error_target: 1e-5,
                outage_window: 200,
                provisioning_margin: 1.0,
                eval_window_ttis: 200,
                latency_budget: 1e-3,
            },
            harq: HarqConfig { harq_rtt: 4, max_harq_attempts: 2 },
            learning: LearningConfig {
                discount: 0.95,
                soft_update: 0.005,
                actor_lr: 1e-5,
                critic_lr: 1e-3,
                optimizer: OptimizerKind::Adam,
                exploration: Exploration::Thompson,
                ensemble_size: 5,
                mask_prob: 0.5,
                epsilon: 0.1,
                exploration_noise: 0.1,
                noise_decay_steps: 50_000,
                replay_capacity: 100_000,
                batch_size: 64,
                warmup_steps: 500,
                hidden_width: 128,
                hidden_layers: 2,
                broadcast_period: 100,
                reward_variant: RewardVariant::Shortfall,
                initial_dual_weight: 0.0,
                gain_db_mean: -35.0,
                gain_db_std: 10.0,
                phi_norm: 100.0,
                train_phi_min: 20.0,
                train_phi_max: 120.0,
            },
            run: RunConfig {
                episode_len_ttis: 50,
                rng_seed: 7,
                train_steps: 50_000,
                checkpoint_every: 10_000,
                metrics_flush_every: 100,
                record_wall_clock: false,
            },
        }
    }
}

/// Worst-case URLLC air-interface latency (queuing excluded).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyReport {
    pub minislots: usize,
    pub seconds: f64,
    pub within_budget: bool,
}

impl SimConfig {
    /// Every violated invariant, in a stable order. Empty means valid.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let n = &self.network;
        let r = &self.radio;
        let t = &self.traffic;
        let h = &self.harq;
        let l = &self.learning;
        let run = &self.run;

        let counts = [
            ("num_cells", n.num_cells),
            ("embb_users_per_cell", n.embb_users_per_cell),
            ("urllc_users_per_cell", n.urllc_users_per_cell),
            ("num_rbs", r.num_rbs),
            ("minislots_per_tti", r.minislots_per_tti),
            ("symbols_per_minislot", r.symbols_per_minislot),
            ("symbols_per_tti", r.symbols_per_tti),
            ("max_harq_attempts", h.max_harq_attempts),
            ("ensemble_size", l.ensemble_size),
            ("replay_capacity", l.replay_capacity),
            ("batch_size", l.batch_size),
            ("hidden_width", l.hidden_width),
            ("outage_window", t.outage_window),
            ("eval_window_ttis", t.eval_window_ttis),
        ];
        for (name, value) in counts {
            if value < 1 {
                v.push(format!("{name} must be >= 1"));
            }
        }
        if run.episode_len_ttis < 1 {
            v.push("episode_len_ttis must be >= 1".into());
        }
        if t.urllc_packet_bits < 1 {
            v.push("urllc_packet_bits must be >= 1".into());
        }
        if r.minislots_per_tti * r.symbols_per_minislot != r.symbols_per_tti {
            v.push(format!(
                "minislots_per_tti x symbols_per_minislot = {} x {} != symbols_per_tti = {}",
                r.minislots_per_tti, r.symbols_per_minislot, r.symbols_per_tti
            ));
        }
        if r.num_rbs as f64 * r.rb_bandwidth > r.total_bandwidth {
            v.push(format!(
                "num_rbs x rb_bandwidth = {} Hz exceeds total_bandwidth = {} Hz",
                r.num_rbs as f64 * r.rb_bandwidth,
                r.total_bandwidth
            ));
        }
        if !(r.subcarrier_spacing > 0.0) || r.rb_bandwidth < r.subcarrier_spacing {
            v.push("rb_bandwidth must hold at least one subcarrier".into());
        } else {
            let sc = r.rb_bandwidth / r.subcarrier_spacing;
            if (sc - sc.round()).abs() > 1e-9 {
                v.push("rb_bandwidth must be a multiple of subcarrier_spacing".into());
            }
        }
        let positive = [
            ("cell_side", n.cell_side),
            ("rb_bandwidth", r.rb_bandwidth),
            ("total_bandwidth", r.total_bandwidth),
            ("tti_duration", r.tti_duration),
            ("minislot_duration", r.minislot_duration),
            ("p_max", r.p_max),
            ("latency_budget", t.latency_budget),
            ("gain_db_std", l.gain_db_std),
            ("phi_norm", l.phi_norm),
            ("provisioning_margin", t.provisioning_margin),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                v.push(format!("{name} must be positive and finite"));
            }
        }
        if !(n.min_user_distance >= 1.0) {
            v.push("min_user_distance must be >= 1 m".into());
        }
        // The placement square must leave room outside the exclusion disc.
        if n.min_user_distance * std::f64::consts::SQRT_2 >= n.cell_side / 2.0 * 1.9 {
            v.push("cell_side too small for min_user_distance".into());
        }
        if !(t.outage_target > 0.0 && t.outage_target < 1.0) {
            v.push("outage_target must lie in (0, 1)".into());
        }
        if !(t.decode_error_target > 0.0 && t.decode_error_target < 0.5) {
            v.push("decode_error_target must lie in (0, 0.5)".into());
        }
        if !(t.arrival_rate >= 0.0 && t.arrival_rate.is_finite()) {
            v.push("arrival_rate must be non-negative".into());
        }
        if !(l.discount > 0.0 && l.discount < 1.0) {
            v.push("discount must lie in (0, 1)".into());
        }
        if !(l.soft_update > 0.0 && l.soft_update <= 1.0) {
            v.push("soft_update must lie in (0, 1]".into());
        }
        if !(l.mask_prob > 0.0 && l.mask_prob <= 1.0) {
            v.push("mask_prob must lie in (0, 1]".into());
        }
        if !(l.epsilon >= 0.0 && l.epsilon <= 1.0) {
            v.push("epsilon must lie in [0, 1]".into());
        }
        if !(l.actor_lr > 0.0) || !(l.critic_lr > 0.0) {
            v.push("learning rates must be positive".into());
        }
        if !(l.exploration_noise >= 0.0) {
            v.push("exploration_noise must be non-negative".into());
        }
        if !(l.train_phi_min >= 0.0 && l.train_phi_max >= l.train_phi_min) {
            v.push("train_phi_min must be >= 0 and <= train_phi_max".into());
        }
        if l.broadcast_period < 1 {
            v.push("broadcast_period must be >= 1".into());
        }
        v
    }

    pub fn validate(self) -> Result<Self> {
        let violations = self.violations();
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(Error::ConfigInvalid { violations })
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Reads and validates a config file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)?.validate()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_toml_string()).map_err(|e| Error::io(path, e))
    }

    /// SHA-256 of the canonical serialisation, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml_string().as_bytes()))
    }

    /// Hash of the fields a trained model depends on (shapes and state
    /// normalisation). Load-dependent fields such as the arrival rate are excluded
    /// so one checkpoint can be evaluated across loads.
    pub fn model_hash(&self) -> String {
        let l = &self.learning;
        let key = format!(
            "ve={};vu={};m={};l={};width={};layers={};ens={};gmean={:?};gstd={:?};phinorm={:?}",
            self.network.embb_users_per_cell,
            self.network.urllc_users_per_cell,
            self.radio.num_rbs,
            self.radio.minislots_per_tti,
            l.hidden_width,
            l.hidden_layers,
            self.ensemble_len(),
            l.gain_db_mean,
            l.gain_db_std,
            l.phi_norm,
        );
        hex::encode(Sha256::digest(key.as_bytes()))
    }

    pub fn num_cells(&self) -> usize {
        self.network.num_cells
    }
    pub fn num_rbs(&self) -> usize {
        self.radio.num_rbs
    }
    pub fn num_minislots(&self) -> usize {
        self.radio.minislots_per_tti
    }
    pub fn embb_users(&self) -> usize {
        self.network.embb_users_per_cell
    }
    pub fn urllc_users(&self) -> usize {
        self.network.urllc_users_per_cell
    }

    pub fn subcarriers_per_rb(&self) -> usize {
        (self.radio.rb_bandwidth / self.radio.subcarrier_spacing).round() as usize
    }

    /// Actors actually instantiated: the configured ensemble under Thompson
    /// exploration, a single actor otherwise.
    pub fn ensemble_len(&self) -> usize {
        match self.learning.exploration {
            Exploration::Thompson => self.learning.ensemble_size,
            Exploration::EpsilonGreedy => 1,
        }
    }

    /// Thermal noise per RB: PSD + 10 log10(B) + NF, in watts.
    pub fn noise_power_w(&self) -> f64 {
        let dbm = self.radio.noise_psd + 10.0 * self.radio.rb_bandwidth.log10() + self.radio.noise_figure;
        10f64.powf((dbm - 30.0) / 10.0)
    }

    pub fn packet_bits(&self) -> u64 {
        u64::from(self.traffic.urllc_packet_bits)
    }

    /// Worst-case latency of one URLLC block: every allowed attempt plus a
    /// feedback wait between consecutive attempts.
    pub fn latency_budget_check(&self) -> LatencyReport {
        let attempts = self.harq.max_harq_attempts;
        let minislots = attempts + attempts.saturating_sub(1) * self.harq.harq_rtt;
        let seconds = minislots as f64 * self.radio.minislot_duration;
        LatencyReport {
            minislots,
            seconds,
            // 1e-12 slack absorbs the decimal representation of the durations.
            within_budget: seconds <= self.traffic.latency_budget + 1e-12,
        }
    }
}
