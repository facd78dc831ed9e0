use crate::netmodel::{RewardVariant, SimConfig};

/// Reward in Mbit/s units from already-normalised rates.
pub fn reward_from_rates(embb: f64, delivered: f64, demand: f64, dual_weight: f64, variant: RewardVariant) -> f64 {
    let penalty = match variant {
        RewardVariant::Shortfall => (demand - delivered).max(0.0),
        RewardVariant::Literal => delivered - demand,
    };
    embb - dual_weight * penalty
}

/// Reward of one cell-TTI. URLLC bits are those delivered for the TTI's arrivals
/// once their HARQ outcomes are final; every rate is expressed in Mbit/s.
pub fn compute_reward(embb_sum_bps: f64, delivered_bits: u64, demand_bits: u64, dual_weight: f64, cfg: &SimConfig) -> f64 {
    let per_tti = 1.0 / (cfg.radio.tti_duration * 1e6);
    reward_from_rates(
        embb_sum_bps / 1e6,
        delivered_bits as f64 * per_tti,
        demand_bits as f64 * per_tti,
        dual_weight,
        cfg.learning.reward_variant,
    )
}

/// `max(phi + psi - psi_target, 0)`.
pub fn update_dual_weight(phi: f64, psi: f64, psi_target: f64) -> f64 {
    (phi + psi - psi_target).max(0.0)
}
