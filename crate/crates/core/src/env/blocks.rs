use crate::netmodel::{PuncturingMask, SimConfig};
use crate::phyrates::{tb_capacity_bits, TbSegment};
use crate::Result;

/// A URLLC transport block as laid out by a puncturing mask: all RBs that one
/// user holds in one mini-slot.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedBlock {
    pub user: usize,
    pub minislot: usize,
    pub rbs: Vec<usize>,
    pub segments: Vec<TbSegment>,
    /// Whole packets the block carries at the decode error target.
    pub capacity_packets: u64,
}

/// Channel uses of one RB during one mini-slot.
pub fn cell_channel_uses(cfg: &SimConfig) -> usize {
    cfg.radio.symbols_per_minislot * cfg.subcarriers_per_rb()
}

/// Whole packets a block over `segments` carries.
pub fn block_capacity_packets(segments: &[TbSegment], cfg: &SimConfig) -> Result<u64> {
    if segments.is_empty() {
        return Ok(0);
    }
    let bits = tb_capacity_bits(segments, cfg.traffic.decode_error_target)?;
    Ok((bits / cfg.packet_bits() as f64).floor() as u64)
}

/// Blocks of mini-slot `l`, users in ascending order. `sinr(v, m)` is the URLLC SINR.
pub fn minislot_blocks<F>(mask: &PuncturingMask, l: usize, sinr: F, cfg: &SimConfig) -> Result<Vec<PlannedBlock>>
where
    F: Fn(usize, usize) -> f64,
{
    let w = cell_channel_uses(cfg);
    let mut out = Vec::new();
    for v in 0..mask.users() {
        let rbs: Vec<usize> = (0..mask.rbs()).filter(|&m| mask.get(v, m, l)).collect();
        if rbs.is_empty() {
            continue;
        }
        let segments: Vec<TbSegment> = rbs.iter().map(|&m| TbSegment { chi: sinr(v, m), channel_uses: w }).collect();
        let capacity_packets = block_capacity_packets(&segments, cfg)?;
        out.push(PlannedBlock { user: v, minislot: l, rbs, segments, capacity_packets });
    }
    Ok(out)
}

/// Packets out of `demand` that a mask can carry on first transmission.
pub fn deliverable_packets<F>(mask: &PuncturingMask, sinr: F, cfg: &SimConfig, demand: u64) -> Result<u64>
where
    F: Fn(usize, usize) -> f64,
{
    let mut cap = 0;
    for l in 0..mask.minislots() {
        cap += minislot_blocks(mask, l, &sinr, cfg)?.iter().map(|b| b.capacity_packets).sum::<u64>();
    }
    Ok(cap.min(demand))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_group_by_user_and_minislot() {
        let cfg = SimConfig::default();
        let mut mask = PuncturingMask::new(4, 12, 7);
        mask.assign(1, 0, 2);
        mask.assign(1, 5, 2);
        mask.assign(0, 3, 2);
        mask.assign(1, 4, 3);
        let blocks = minislot_blocks(&mask, 2, |_, _| 100.0, &cfg).unwrap();
        assert_eq!(blocks.len(), 2);
        assert_eq!((blocks[0].user, blocks[0].rbs.clone()), (0, vec![3]));
        assert_eq!((blocks[1].user, blocks[1].rbs.clone()), (1, vec![0, 5]));
        assert!(blocks[1].capacity_packets >= blocks[0].capacity_packets);
    }

    #[test]
    fn aggregate_capacity_matches_normal_approximation() {
        let cfg = SimConfig::default();
        let seg = TbSegment { chi: 31.0, channel_uses: 24 };
        // 24 uses at 5 bit/use, dispersion 1 - 1/1024.
        let expected = 120.0 - (24.0f64 * (1.0 - 1.0 / 1024.0)).sqrt() * 4.264890793922825;
        let bits = tb_capacity_bits(&[seg], 1e-5).unwrap();
        assert!((bits - expected).abs() < 1e-9);
        assert_eq!(block_capacity_packets(&[seg], &cfg).unwrap(), 0);
        let many = vec![seg; 12];
        assert_eq!(block_capacity_packets(&many, &cfg).unwrap(), ((1440.0 - (12.0f64 * 24.0 * (1.0 - 1.0 / 1024.0)).sqrt() * 4.264890793922825) / 256.0).floor() as u64);
    }

    #[test]
    fn deliverable_is_capped_by_demand() {
        let cfg = SimConfig::default();
        let mut mask = PuncturingMask::new(1, 12, 7);
        for m in 0..12 {
            mask.assign(0, m, 0);
        }
        assert_eq!(deliverable_packets(&mask, |_, _| 1000.0, &cfg, 2).unwrap(), 2);
        assert_eq!(deliverable_packets(&PuncturingMask::new(1, 12, 7), |_, _| 1000.0, &cfg, 2).unwrap(), 0);
    }
}
