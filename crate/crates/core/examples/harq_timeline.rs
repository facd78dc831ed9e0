//! Runs a few TTIs with a random policy, writes the packet event log as CSV and
//! summarizes first-transmission-to-terminal latencies.
//!
//! `cargo run --release --example harq_timeline -- [events.csv]`

use std::collections::{BTreeMap, HashMap};

use rand::Rng;

use orsched::env::{ActionLayout, Env, RawAction};
use orsched::harq::EventKind;
use orsched::rng;
use orsched::SimConfig;

fn main() -> orsched::Result<()> {
    let out = std::env::args().nth(1);
    let mut cfg = SimConfig::default();
    cfg.network.num_cells = 2;
    cfg.traffic.urllc_packet_bits = 32;
    cfg.run.episode_len_ttis = 20;
    let mut env = Env::new(cfg.clone(), 3);
    env.enable_event_log();
    let layout = ActionLayout::new(&cfg);
    let mut r = rng::stream(3, rng::tag::EXPLORATION);

    env.reset(60.0)?;
    while !env.is_done() {
        let actions: Vec<RawAction> =
            (0..cfg.num_cells()).map(|_| RawAction((0..layout.len()).map(|_| r.random_range(-1.0..=1.0)).collect())).collect();
        env.step(&actions)?;
    }

    let log = env.event_log().expect("event log enabled");
    let l_n = cfg.num_minislots() as u64;
    let mut first_tx: HashMap<(usize, u64), u64> = HashMap::new();
    let mut latency: BTreeMap<(bool, u64), usize> = BTreeMap::new();
    let mut kinds: BTreeMap<String, usize> = BTreeMap::new();
    for e in &log.records {
        *kinds.entry(e.kind.to_string()).or_default() += 1;
        let slot = e.tti * l_n + e.minislot as u64;
        match e.kind {
            EventKind::Tx => {
                first_tx.entry((e.cell, e.packet)).or_insert(slot);
            }
            EventKind::Delivered | EventKind::Lost => {
                if let Some(&t0) = first_tx.get(&(e.cell, e.packet)) {
                    *latency.entry((e.kind == EventKind::Delivered, slot - t0)).or_default() += 1;
                }
            }
            _ => {}
        }
    }
    println!("events by kind: {kinds:?}");
    for ((delivered, slots), n) in latency {
        println!(
            "{:>9} after {slots} mini-slots ({:.3} ms): {n}",
            if delivered { "delivered" } else { "lost" },
            slots as f64 * cfg.radio.minislot_duration * 1e3
        );
    }
    let c = env.counters();
    println!("arrived {} delivered {} lost {}", c.arrived, c.delivered, c.lost);

    if let Some(path) = out {
        let mut f = std::fs::File::create(&path).map_err(|e| orsched::Error::io(&path, e))?;
        log.write_csv(&mut f).map_err(|e| orsched::Error::io(&path, e))?;
        println!("wrote {} events to {path}", log.records.len());
    }
    Ok(())
}
