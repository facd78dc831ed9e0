use crate::channel::ChannelRealization;
use crate::netmodel::{AllocationDecision, SimConfig, UrllcPower};
use crate::phyrates::{tb_capacity_bits, TbSegment};
use crate::{Error, Result};

use super::blocks::cell_channel_uses;

/// Offsets of the three heads inside a flat raw action vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionLayout {
    pub embb_users: usize,
    pub rbs: usize,
    pub minislots: usize,
}

impl ActionLayout {
    pub fn new(cfg: &SimConfig) -> Self {
        ActionLayout { embb_users: cfg.embb_users(), rbs: cfg.num_rbs(), minislots: cfg.num_minislots() }
    }

    /// `V_e * M` assignment scores, index `v * M + m`.
    pub fn assignment(&self) -> std::ops::Range<usize> {
        0..self.embb_users * self.rbs
    }

    /// `M` power logits.
    pub fn power(&self) -> std::ops::Range<usize> {
        let s = self.assignment().end;
        s..s + self.rbs
    }

    /// `M * L` puncture scores, index `m * L + l`.
    pub fn puncture(&self) -> std::ops::Range<usize> {
        let s = self.power().end;
        s..s + self.rbs * self.minislots
    }

    pub fn len(&self) -> usize {
        self.puncture().end
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Continuous actor output for one cell, entries in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawAction(pub Vec<f64>);

/// Per-watt URLLC SINR of each (user, RB) of one cell under nominal interference:
/// every neighbour transmits `P_max / M` on every RB.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkEstimate {
    pub rbs: usize,
    /// `v * M + m`.
    pub sinr_per_watt: Vec<f64>,
}

impl LinkEstimate {
    pub fn nominal(chan: &ChannelRealization, cfg: &SimConfig, k: usize) -> Self {
        let m_n = cfg.num_rbs();
        let p_nom = cfg.radio.p_max / m_n as f64;
        let noise = cfg.noise_power_w();
        let mut sinr_per_watt = Vec::with_capacity(cfg.urllc_users() * m_n);
        for v in 0..cfg.urllc_users() {
            for m in 0..m_n {
                let interf: f64 =
                    (0..cfg.num_cells()).filter(|&kp| kp != k).map(|kp| p_nom * chan.g_urllc(kp, k, v, m)).sum();
                sinr_per_watt.push(chan.g_urllc(k, k, v, m) / (interf + noise));
            }
        }
        LinkEstimate { rbs: m_n, sinr_per_watt }
    }

    pub fn get(&self, v: usize, m: usize) -> f64 {
        self.sinr_per_watt[v * self.rbs + m]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DecodeOptions {
    /// Snap per-RB power to `levels` evenly spaced fractions of `P_max` (including zero).
    pub power_levels: Option<usize>,
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Rounds shares to multiples of `1 / (levels - 1)` and trims the largest until they sum to at most one.
pub fn quantize_shares(shares: &[f64], levels: usize) -> Vec<f64> {
    assert!(levels >= 2);
    let steps = (levels - 1) as i64;
    let mut q: Vec<i64> = shares.iter().map(|&s| (s * steps as f64).round() as i64).collect();
    while q.iter().sum::<i64>() > steps {
        let mut best = 0;
        for (i, &x) in q.iter().enumerate() {
            if x > q[best] {
                best = i;
            }
        }
        q[best] -= 1;
    }
    q.into_iter().map(|x| x as f64 / steps as f64).collect()
}

/// Indices sorted by descending score, ties to the lower index.
fn ranked(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

/// Number of puncture cells provisioned for `demand` packets given per-RB power.
pub fn provisioned_cells(demand: u64, rb_power: &[f64], link: &LinkEstimate, cfg: &SimConfig) -> Result<usize> {
    let cap = cfg.num_rbs() * cfg.num_minislots();
    if demand == 0 || cfg.urllc_users() == 0 {
        return Ok(0);
    }
    let rho = cfg.packet_bits() as f64;
    let w = cell_channel_uses(cfg);
    let x = cfg.traffic.decode_error_target;
    let p_equal = cfg.radio.p_max / cfg.num_rbs() as f64;
    let (mut raw, mut quant, mut n) = (0.0, 0.0, 0.0);
    for v in 0..cfg.urllc_users() {
        for (m, &p_rb) in rb_power.iter().enumerate() {
            let p = match cfg.radio.urllc_power {
                UrllcPower::ReuseEmbb => p_rb,
                UrllcPower::EqualShare => p_equal,
            };
            let chi = p * link.get(v, m);
            let bits = tb_capacity_bits(&[TbSegment { chi, channel_uses: w }], x)?;
            raw += bits;
            quant += (bits / rho).floor() * rho;
            n += 1.0;
        }
    }
    let per_cell = if quant > 0.0 { quant / n } else { raw / n };
    if per_cell <= 0.0 {
        return Ok(cap);
    }
    let need = (cfg.traffic.provisioning_margin * rho * demand as f64 / per_cell).ceil();
    Ok((need as usize).min(cap))
}

/// Maps a raw actor output to a feasible decision for cell `cell`.
pub fn decode_action(
    raw: &RawAction,
    demand_packets: u64,
    link: &LinkEstimate,
    cfg: &SimConfig,
    cell: usize,
    tti: u64,
    opts: &DecodeOptions,
) -> Result<AllocationDecision> {
    let layout = ActionLayout::new(cfg);
    if raw.0.len() != layout.len() {
        return Err(Error::Shape(format!("raw action has {} entries, expected {}", raw.0.len(), layout.len())));
    }
    if raw.0.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("raw action contains non-finite entries".into()));
    }
    let (m_n, l_n, ve) = (layout.rbs, layout.minislots, layout.embb_users);
    let mut d = AllocationDecision::empty(cfg, cell, tti);
    let scores = &raw.0[layout.assignment()];
    for m in 0..m_n {
        let mut best = 0;
        for v in 1..ve {
            if scores[v * m_n + m] > scores[best * m_n + m] {
                best = v;
            }
        }
        if ve > 0 {
            d.assignment.set(best, m, true);
        }
    }

    let mut shares = softmax(&raw.0[layout.power()]);
    if let Some(levels) = opts.power_levels {
        shares = quantize_shares(&shares, levels);
    }
    let rb_power: Vec<f64> = shares.iter().map(|s| s * cfg.radio.p_max).collect();
    for (m, &p) in rb_power.iter().enumerate() {
        if let Some(v) = d.assignment.owner(m) {
            d.power.set(v, m, p);
        }
    }

    let n = provisioned_cells(demand_packets, &rb_power, link, cfg)?;
    let vu = cfg.urllc_users();
    for (i, &cell_idx) in ranked(&raw.0[layout.puncture()]).iter().take(n).enumerate() {
        d.puncture.assign(i % vu, cell_idx / l_n, cell_idx % l_n);
    }
    Ok(d)
}
