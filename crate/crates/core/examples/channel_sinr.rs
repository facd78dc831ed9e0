//! Drops users, draws one block-fading realization and evaluates eMBB and URLLC SINRs
//! for an equal-power allocation with one punctured mini-slot per RB.
//!
//! `cargo run --example channel_sinr`

use orsched::channel::{draw_channel, SinrContext, UserPlacement};
use orsched::netmodel::{PowerAllocation, PuncturingMask};
use orsched::rng;
use orsched::SimConfig;

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn main() {
    let mut cfg = SimConfig::default();
    cfg.network.num_cells = 3;
    cfg.radio.num_rbs = 6;
    let (k_n, m_n, ve, vu, l_n) = (cfg.num_cells(), cfg.num_rbs(), cfg.embb_users(), cfg.urllc_users(), cfg.num_minislots());

    let mut r = rng::stream(7, rng::tag::PLACEMENT);
    let placement = UserPlacement::random(&cfg, &mut r);
    let chan = draw_channel(&placement, &cfg, 0, &mut r);

    let mut powers = Vec::new();
    let mut masks = Vec::new();
    for _ in 0..k_n {
        let mut p = PowerAllocation::new(ve, m_n);
        let mut mask = PuncturingMask::new(vu, m_n, l_n);
        for m in 0..m_n {
            p.set(m % ve, m, cfg.radio.p_max / m_n as f64);
            mask.set(m % vu, m, 0, true);
        }
        powers.push(p);
        masks.push(mask);
    }
    let ctx = SinrContext::new(&cfg, &chan, &powers, &masks);

    println!("noise per RB {:.2} dBm", db(cfg.noise_power_w()) + 30.0);
    println!("cell  rb  embb_user  sinr_e_db  urllc_user  sinr_u_db");
    for k in 0..k_n {
        for m in 0..m_n {
            let (v, u) = (m % ve, m % vu);
            println!("{k:>4}  {m:>2}  {v:>9}  {:>9.2}  {u:>10}  {:>9.2}", db(ctx.embb(k, v, m)), db(ctx.urllc(k, u, m)));
        }
    }

    let mut csv = Vec::new();
    chan.write_csv(&mut csv, true).expect("in-memory write");
    let text = String::from_utf8(csv).expect("utf8");
    println!("\nchannel CSV, first rows:");
    for line in text.lines().take(4) {
        println!("{line}");
    }
}
