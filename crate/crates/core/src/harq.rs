//! URLLC traffic, the HARQ pipeline and the sliding-window outage estimator.
//!
//! Two clocks are in play: TTIs for scheduling decisions and mini-slots for URLLC
//! transmissions. The ledger runs on absolute mini-slot indices
//! (`tti * L + minislot`). Attempt `n` of a block is transmitted during one
//! mini-slot; its feedback surfaces `harq_rtt` mini-slots after that mini-slot ends,
//! and a retransmission goes out in the mini-slot where the NACK surfaces. The
//! final allowed attempt is terminal as soon as it has been decoded.
//! Attempts are decoded independently (no soft combining).

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::Result;
use crate::netmodel::SimConfig;
use crate::phyrates::{tb_error_prob, TbSegment};

/// Packets arriving in each mini-slot of one TTI for one cell.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UrllcArrivalRecord {
    pub per_minislot: Vec<u32>,
}

impl UrllcArrivalRecord {
    pub fn total(&self) -> u32 {
        self.per_minislot.iter().sum()
    }

    pub fn none(minislots: usize) -> Self {
        UrllcArrivalRecord { per_minislot: vec![0; minislots] }
    }

    /// Arrival mini-slot of each packet in arrival order.
    pub fn packet_minislots(&self) -> impl Iterator<Item = usize> + '_ {
        self.per_minislot.iter().enumerate().flat_map(|(l, &n)| std::iter::repeat_n(l, n as usize))
    }
}

/// Poisson arrivals with mean `phi_mean / L` in each mini-slot.
pub fn draw_arrivals<R: Rng + ?Sized>(phi_mean: f64, cfg: &SimConfig, rng: &mut R) -> UrllcArrivalRecord {
    let l = cfg.num_minislots();
    let lambda = phi_mean / l as f64;
    let per_minislot = if lambda > 0.0 {
        let poisson = Poisson::new(lambda).expect("positive finite rate");
        (0..l).map(|_| poisson.sample(rng) as u32).collect()
    } else {
        vec![0; l]
    };
    UrllcArrivalRecord { per_minislot }
}

/// Bernoulli decode of one attempt: returns `(success, error_probability)`.
pub fn attempt_decode<R: Rng + ?Sized>(segments: &[TbSegment], bits: u64, rng: &mut R) -> Result<(bool, f64)> {
    let eps = tb_error_prob(segments, bits as f64)?;
    Ok((bernoulli_success(eps, rng), eps))
}

/// Success with probability `1 - eps`; one uniform draw per call.
pub fn bernoulli_success<R: Rng + ?Sized>(eps: f64, rng: &mut R) -> bool {
    rng.random::<f64>() >= eps
}

pub type BlockId = u64;

/// What a block carries and where its first attempt went.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpec {
    pub cell: usize,
    pub user: usize,
    pub origin_tti: u64,
    pub rbs: Vec<usize>,
    pub packets: Vec<u64>,
    pub bits: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportBlock {
    pub id: BlockId,
    pub spec: BlockSpec,
    /// Absolute mini-slot of the first attempt.
    pub first_slot: u64,
    /// Mini-slot of each attempt so far.
    pub attempt_slots: Vec<u64>,
    /// Decode outcome of each attempt so far.
    pub outcomes: Vec<bool>,
}

impl TransportBlock {
    pub fn attempts(&self) -> usize {
        self.outcomes.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Due {
    Feedback { ack: bool },
    Terminal { delivered: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub enum HarqEvent {
    Feedback { block: BlockId, slot: u64, ack: bool },
    Retransmit { block: BlockId, slot: u64, attempt: usize },
    Delivered { block: TransportBlock, slot: u64 },
    Lost { block: TransportBlock, slot: u64 },
}

/// In-flight URLLC transport blocks.
#[derive(Debug, Clone)]
pub struct HarqLedger {
    rtt: u64,
    max_attempts: usize,
    next_id: BlockId,
    clock: u64,
    blocks: BTreeMap<BlockId, (TransportBlock, Due)>,
    agenda: BTreeSet<(u64, BlockId)>,
}

impl HarqLedger {
    pub fn new(cfg: &SimConfig) -> Self {
        Self::with_timing(cfg.harq.harq_rtt, cfg.harq.max_harq_attempts)
    }

    pub fn with_timing(rtt_minislots: usize, max_attempts: usize) -> Self {
        assert!(max_attempts >= 1);
        HarqLedger {
            rtt: rtt_minislots as u64,
            max_attempts,
            next_id: 0,
            clock: 0,
            blocks: BTreeMap::new(),
            agenda: BTreeSet::new(),
        }
    }

    pub fn in_flight(&self) -> usize {
        self.blocks.len()
    }

    pub fn in_flight_packets(&self) -> usize {
        self.blocks.values().map(|(b, _)| b.spec.packets.len()).sum()
    }

    pub fn block(&self, id: BlockId) -> Option<&TransportBlock> {
        self.blocks.get(&id).map(|(b, _)| b)
    }

    /// When and how attempt `n` that went out in `slot` resolves.
    fn schedule(&self, slot: u64, attempt: usize, success: bool) -> (u64, Due) {
        if attempt >= self.max_attempts {
            (slot + 1, Due::Terminal { delivered: success })
        } else {
            (slot + 1 + self.rtt, Due::Feedback { ack: success })
        }
    }

    /// First attempt of a new block in mini-slot `slot` with a pre-drawn decode outcome.
    pub fn transmit(&mut self, spec: BlockSpec, slot: u64, success: bool) -> BlockId {
        assert!(slot >= self.clock, "transmission in the past");
        let id = self.next_id;
        self.next_id += 1;
        let block =
            TransportBlock { id, spec, first_slot: slot, attempt_slots: vec![slot], outcomes: vec![success] };
        let (due_slot, due) = self.schedule(slot, 1, success);
        self.agenda.insert((due_slot, id));
        self.blocks.insert(id, (block, due));
        id
    }

    /// Processes everything due in mini-slot `slot`. `grant` is asked for resources
    /// for each retransmission and returns its success flag, or `None` when the
    /// retransmission cannot be placed (the block is lost).
    pub fn advance<F>(&mut self, slot: u64, mut grant: F) -> Vec<HarqEvent>
    where
        F: FnMut(&TransportBlock, u64) -> Option<bool>,
    {
        assert!(slot >= self.clock, "ledger clock runs forward only");
        self.clock = slot;
        let mut events = Vec::new();
        while let Some(&(due_slot, id)) = self.agenda.first() {
            if due_slot > slot {
                break;
            }
            debug_assert_eq!(due_slot, slot, "advance skipped a mini-slot");
            self.agenda.pop_first();
            let (mut block, due) = self.blocks.remove(&id).expect("agenda entry without block");
            match due {
                Due::Terminal { delivered } => {
                    events.push(if delivered {
                        HarqEvent::Delivered { block, slot }
                    } else {
                        HarqEvent::Lost { block, slot }
                    });
                }
                Due::Feedback { ack: true } => {
                    events.push(HarqEvent::Feedback { block: id, slot, ack: true });
                    events.push(HarqEvent::Delivered { block, slot });
                }
                Due::Feedback { ack: false } => {
                    events.push(HarqEvent::Feedback { block: id, slot, ack: false });
                    match grant(&block, slot) {
                        Some(success) => {
                            block.attempt_slots.push(slot);
                            block.outcomes.push(success);
                            let attempt = block.attempts();
                            events.push(HarqEvent::Retransmit { block: id, slot, attempt });
                            let (due_slot, due) = self.schedule(slot, attempt, success);
                            self.agenda.insert((due_slot, id));
                            self.blocks.insert(id, (block, due));
                        }
                        None => events.push(HarqEvent::Lost { block, slot }),
                    }
                }
            }
        }
        events
    }
}

/// Sliding-window outage probability per cell.
#[derive(Debug, Clone)]
pub struct OutageEstimator {
    window: usize,
    cells: Vec<WindowState>,
}

#[derive(Debug, Clone, Default)]
struct WindowState {
    flags: VecDeque<bool>,
    violations: usize,
}

impl OutageEstimator {
    pub fn new(cells: usize, window: usize) -> Self {
        assert!(window >= 1);
        OutageEstimator { window, cells: vec![WindowState::default(); cells] }
    }

    /// Records TTI outcome for `cell` and returns the updated outage estimate.
    pub fn update(&mut self, cell: usize, delivered_bits: u64, demand_bits: u64) -> f64 {
        self.record(cell, delivered_bits < demand_bits)
    }

    pub fn record(&mut self, cell: usize, violation: bool) -> f64 {
        let st = &mut self.cells[cell];
        st.flags.push_back(violation);
        st.violations += usize::from(violation);
        if st.flags.len() > self.window {
            let old = st.flags.pop_front().expect("non-empty");
            st.violations -= usize::from(old);
        }
        self.psi(cell)
    }

    /// Current `violations / min(window, elapsed)`; zero before any TTI.
    pub fn psi(&self, cell: usize) -> f64 {
        let st = &self.cells[cell];
        if st.flags.is_empty() {
            0.0
        } else {
            st.violations as f64 / st.flags.len() as f64
        }
    }

    /// Same statistic recounted from the stored window.
    pub fn recount(&self, cell: usize) -> f64 {
        let st = &self.cells[cell];
        if st.flags.is_empty() {
            return 0.0;
        }
        st.flags.iter().filter(|&&f| f).count() as f64 / st.flags.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Arrival,
    Tx,
    Feedback,
    Retx,
    Delivered,
    Lost,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Arrival => "arrival",
            EventKind::Tx => "tx",
            EventKind::Feedback => "feedback",
            EventKind::Retx => "retx",
            EventKind::Delivered => "delivered",
            EventKind::Lost => "lost",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventRecord {
    pub tti: u64,
    pub minislot: usize,
    pub kind: EventKind,
    pub packet: u64,
    pub cell: usize,
}

/// Packet-level event log.
#[derive(Debug, Clone, Default)]
pub struct EventLog {
    pub records: Vec<EventRecord>,
}

impl EventLog {
    pub fn push(&mut self, slot: u64, minislots: usize, kind: EventKind, packet: u64, cell: usize) {
        self.records.push(EventRecord {
            tti: slot / minislots as u64,
            minislot: (slot % minislots as u64) as usize,
            kind,
            packet,
            cell,
        });
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "tti,minislot,event,packet_id,cell")?;
        for r in &self.records {
            writeln!(out, "{},{},{},{},{}", r.tti, r.minislot, r.kind, r.packet, r.cell)?;
        }
        Ok(())
    }
}
