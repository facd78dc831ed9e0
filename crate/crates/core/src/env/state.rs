use crate::channel::ChannelRealization;
use crate::harq::UrllcArrivalRecord;
use crate::netmodel::SimConfig;

/// Floor applied before taking dB of a gain.
const MIN_GAIN: f64 = 1e-30;

/// Fixed-length observation of one cell: standardised own-cell eMBB gains,
/// URLLC gains, normalised arrival count and the two user counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState(pub Vec<f64>);

impl CellState {
    pub fn len_for(cfg: &SimConfig) -> usize {
        (cfg.embb_users() + cfg.urllc_users()) * cfg.num_rbs() + 3
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

fn encode_gain(g: f64, cfg: &SimConfig) -> f64 {
    let db = 10.0 * g.max(MIN_GAIN).log10();
    (db - cfg.learning.gain_db_mean) / cfg.learning.gain_db_std
}

/// Observation of cell `k`; only gains from BS `k` to its own users are read.
pub fn build_state(chan: &ChannelRealization, arrivals: &UrllcArrivalRecord, cfg: &SimConfig, k: usize) -> CellState {
    let m_n = cfg.num_rbs();
    let mut s = Vec::with_capacity(CellState::len_for(cfg));
    for v in 0..cfg.embb_users() {
        for m in 0..m_n {
            s.push(encode_gain(chan.g_embb(k, k, v, m), cfg));
        }
    }
    for v in 0..cfg.urllc_users() {
        for m in 0..m_n {
            s.push(encode_gain(chan.g_urllc(k, k, v, m), cfg));
        }
    }
    s.push(f64::from(arrivals.total()) / cfg.learning.phi_norm);
    s.push(cfg.embb_users() as f64 / 10.0);
    s.push(cfg.urllc_users() as f64 / 10.0);
    CellState(s)
}
