use crate::channel::{ChannelRealization, SinrContext};
use crate::netmodel::{AllocationDecision, PowerAllocation, PuncturingMask, RbAssignment, SimConfig};
use crate::phyrates::{embb_rb_rate, RateReport, TbSegment};
use crate::{Error, Result};

use super::blocks::{block_capacity_packets, cell_channel_uses, deliverable_packets};

/// eMBB sum rate and URLLC packets a single-cell decision achieves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionValue {
    pub embb_bps: f64,
    pub delivered: u64,
}

impl DecisionValue {
    /// Lexicographic order: delivered packets first, then eMBB rate.
    pub fn better_than(&self, other: &DecisionValue) -> bool {
        self.delivered > other.delivered || (self.delivered == other.delivered && self.embb_bps > other.embb_bps)
    }
}

/// Values a decision in a one-cell network with deterministic capacity-based packing.
pub fn evaluate_single_cell(
    decision: &AllocationDecision,
    chan: &ChannelRealization,
    cfg: &SimConfig,
    demand: u64,
) -> Result<DecisionValue> {
    if chan.cells() != 1 {
        return Err(Error::Size(format!("single-cell evaluation on {} cells", chan.cells())));
    }
    let powers = [decision.power.clone()];
    let masks = [decision.puncture.clone()];
    let ctx = SinrContext::new(cfg, chan, &powers, &masks);
    let embb_bps = RateReport::compute(decision, &ctx, cfg)?.embb_sum();
    let delivered = deliverable_packets(&decision.puncture, |v, m| ctx.urllc(0, v, m), cfg, demand)?;
    Ok(DecisionValue { embb_bps, delivered })
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub decision: AllocationDecision,
    pub value: DecisionValue,
    /// Whether the whole demand can be delivered by some decision.
    pub demand_met: bool,
    pub evaluated: u64,
}

/// Limits of the exhaustive search.
pub const ORACLE_MAX_RBS: usize = 3;
pub const ORACLE_MAX_EMBB: usize = 2;
pub const ORACLE_MAX_URLLC: usize = 1;
pub const ORACLE_MAX_MINISLOTS: usize = 3;
pub const ORACLE_MAX_LEVELS: usize = 4;

fn check_size(cfg: &SimConfig, levels: usize) -> Result<()> {
    let mut bad = Vec::new();
    if cfg.num_cells() != 1 {
        bad.push(format!("K = {} (max 1)", cfg.num_cells()));
    }
    if cfg.num_rbs() > ORACLE_MAX_RBS {
        bad.push(format!("M = {} (max {ORACLE_MAX_RBS})", cfg.num_rbs()));
    }
    if cfg.embb_users() > ORACLE_MAX_EMBB {
        bad.push(format!("V_e = {} (max {ORACLE_MAX_EMBB})", cfg.embb_users()));
    }
    if cfg.urllc_users() != ORACLE_MAX_URLLC {
        bad.push(format!("V_u = {} (must be {ORACLE_MAX_URLLC})", cfg.urllc_users()));
    }
    if cfg.num_minislots() > ORACLE_MAX_MINISLOTS {
        bad.push(format!("L = {} (max {ORACLE_MAX_MINISLOTS})", cfg.num_minislots()));
    }
    if !(2..=ORACLE_MAX_LEVELS).contains(&levels) {
        bad.push(format!("{levels} power levels (2..={ORACLE_MAX_LEVELS})"));
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::Size(bad.join(", ")))
    }
}

/// Odometer over `digits` positions with radix `base`.
fn odometer(digits: usize, base: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = base.pow(digits as u32);
    (0..total).map(move |mut i| {
        let mut out = vec![0; digits];
        for d in out.iter_mut() {
            *d = i % base;
            i /= base;
        }
        out
    })
}

/// Exhaustive search over RB owners (unassigned allowed), per-RB power on a
/// `levels`-point grid summing to at most `P_max`, and every puncturing pattern.
/// Maximises delivered packets first (up to `demand`), then the eMBB sum rate.
/// Ties keep the first candidate in enumeration order.
pub fn solve_tiny_oracle(chan: &ChannelRealization, cfg: &SimConfig, demand: u64, levels: usize) -> Result<OracleSolution> {
    check_size(cfg, levels)?;
    let (m_n, l_n, ve) = (cfg.num_rbs(), cfg.num_minislots(), cfg.embb_users());
    let noise = cfg.noise_power_w();
    let steps = levels - 1;
    let w = cell_channel_uses(cfg);
    let subsets = 1usize << m_n;

    let mut best: Option<(DecisionValue, Vec<usize>, Vec<usize>, Vec<usize>)> = None;
    let mut evaluated = 0u64;
    for level in odometer(m_n, levels) {
        if level.iter().sum::<usize>() > steps {
            continue;
        }
        let p: Vec<f64> = level.iter().map(|&j| j as f64 / steps as f64 * cfg.radio.p_max).collect();
        let block_cap: Vec<u64> = (0..subsets)
            .map(|set| {
                let segs: Vec<TbSegment> = (0..m_n)
                    .filter(|m| set >> m & 1 == 1)
                    .map(|m| TbSegment { chi: p[m] * chan.g_urllc(0, 0, 0, m) / noise, channel_uses: w })
                    .collect();
                block_capacity_packets(&segs, cfg)
            })
            .collect::<Result<_>>()?;
        for owner in odometer(m_n, ve + 1) {
            // Digit 0 leaves the RB unassigned; power on it would be wasted.
            if (0..m_n).any(|m| owner[m] == 0 && level[m] > 0) {
                continue;
            }
            let log_terms: Vec<f64> = (0..m_n)
                .map(|m| match owner[m] {
                    0 => 0.0,
                    v => (1.0 + p[m] * chan.g_embb(0, 0, v - 1, m) / noise).log2(),
                })
                .collect();
            for pattern in odometer(l_n, subsets) {
                evaluated += 1;
                let delivered = pattern.iter().map(|&s| block_cap[s]).sum::<u64>().min(demand);
                let embb_bps: f64 = (0..m_n)
                    .map(|m| {
                        let n = pattern.iter().filter(|&&s| s >> m & 1 == 1).count();
                        if owner[m] == 0 {
                            0.0
                        } else {
                            cfg.radio.rb_bandwidth * (1.0 - n as f64 / l_n as f64) * log_terms[m]
                        }
                    })
                    .sum();
                let value = DecisionValue { embb_bps, delivered };
                if best.as_ref().is_none_or(|(b, ..)| value.better_than(b)) {
                    best = Some((value, owner.clone(), level.clone(), pattern));
                }
            }
        }
    }
    let (closed_form, owner, level, pattern) = best.expect("search space is never empty");
    let mut assignment = RbAssignment::new(ve, m_n);
    let mut power = PowerAllocation::new(ve, m_n);
    let mut puncture = PuncturingMask::new(1, m_n, l_n);
    for m in 0..m_n {
        if owner[m] > 0 {
            assignment.set(owner[m] - 1, m, true);
            power.set(owner[m] - 1, m, level[m] as f64 / steps as f64 * cfg.radio.p_max);
        }
        for (l, &s) in pattern.iter().enumerate() {
            if s >> m & 1 == 1 {
                puncture.assign(0, m, l);
            }
        }
    }
    let decision = AllocationDecision { cell: 0, tti: chan.tti, assignment, power, puncture };
    let value = evaluate_single_cell(&decision, chan, cfg, demand)?;
    debug_assert_eq!(value.delivered, closed_form.delivered);
    debug_assert!((value.embb_bps - closed_form.embb_bps).abs() <= 1e-9 * closed_form.embb_bps.max(1.0));
    Ok(OracleSolution { decision, value, demand_met: value.delivered >= demand, evaluated })
}

/// Embb rate of one RB used by the oracle's closed form, exposed for tests.
pub fn oracle_rb_rate(p: f64, gain: f64, punctured: usize, cfg: &SimConfig) -> f64 {
    embb_rb_rate(p * gain / cfg.noise_power_w(), punctured, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny_cfg(m: usize, ve: usize, l: usize) -> SimConfig {
        let mut cfg = SimConfig::default();
        cfg.network.num_cells = 1;
        cfg.network.embb_users_per_cell = ve;
        cfg.network.urllc_users_per_cell = 1;
        cfg.radio.num_rbs = m;
        cfg.radio.minislots_per_tti = l;
        cfg.radio.symbols_per_tti = l * cfg.radio.symbols_per_minislot;
        cfg
    }

    #[test]
    fn oversized_instance_is_rejected() {
        let cfg = SimConfig::default();
        let chan = ChannelRealization::uniform(&cfg, 0, 1e-9);
        assert!(matches!(solve_tiny_oracle(&chan, &cfg, 1, 4), Err(Error::Size(_))));
        let cfg = tiny_cfg(3, 2, 3);
        let chan = ChannelRealization::uniform(&cfg, 0, 1e-9);
        assert!(matches!(solve_tiny_oracle(&chan, &cfg, 1, 5), Err(Error::Size(_))));
    }

    #[test]
    fn no_demand_means_full_embb_use() {
        let cfg = tiny_cfg(2, 1, 2);
        let chan = ChannelRealization::uniform(&cfg, 0, 1e-9);
        let sol = solve_tiny_oracle(&chan, &cfg, 0, 3).unwrap();
        assert_eq!(sol.decision.puncture.total(), 0);
        assert!(sol.decision.is_feasible(&cfg));
        // Symmetric RBs: equal split on a 3-level grid.
        let half = cfg.radio.p_max / 2.0;
        assert!((sol.decision.power.get(0, 0) - half).abs() < 1e-12);
        let expected = 2.0 * oracle_rb_rate(half, 1e-9, 0, &cfg);
        assert!((sol.value.embb_bps - expected).abs() < 1e-6);
    }

    #[test]
    fn identical_users_tie_to_first_in_order() {
        let cfg = tiny_cfg(2, 2, 2);
        let chan = ChannelRealization::uniform(&cfg, 0, 1e-9);
        let sol = solve_tiny_oracle(&chan, &cfg, 0, 3).unwrap();
        assert_eq!(sol.decision.assignment.owner(0), Some(0));
        assert_eq!(sol.decision.assignment.owner(1), Some(0));
    }

    #[test]
    fn closed_form_matches_generic_evaluation() {
        let cfg = tiny_cfg(3, 2, 3);
        let chan = ChannelRealization::from_fn(&cfg, 0, |class, _, _, v, m| {
            1e-10 * (1.0 + v as f64 + 0.5 * m as f64) * if matches!(class, crate::channel::UserClass::Urllc) { 0.3 } else { 1.0 }
        });
        let sol = solve_tiny_oracle(&chan, &cfg, 3, 4).unwrap();
        assert!(sol.decision.is_feasible(&cfg));
        assert!(sol.demand_met);
        assert_eq!(sol.value.delivered, 3);
    }
}
