//! Tabulates the punctured eMBB rate and the finite-blocklength URLLC rate per RB, and
//! shows the block error probability of transmitting at those rates.
//!
//! `cargo run --example rates`

use orsched::phyrates::{decode_error_prob, embb_rb_rate, q_function, q_inverse, urllc_blocklength, urllc_rb_rate};
use orsched::SimConfig;

fn main() -> orsched::Result<()> {
    let cfg = SimConfig::default();
    let x = cfg.traffic.decode_error_target;
    println!("Q^-1({x:e}) = {:.6}, Q of that = {:e}", q_inverse(x)?, q_function(q_inverse(x)?));

    println!("\neMBB rate per RB (Mbit/s) by punctured mini-slots");
    print!("sinr_db");
    for n in 0..=cfg.num_minislots() {
        print!("{n:>8}");
    }
    println!();
    for sinr_db in [0.0, 10.0, 20.0, 30.0] {
        let chi = 10f64.powf(sinr_db / 10.0);
        print!("{sinr_db:>7.0}");
        for n in 0..=cfg.num_minislots() {
            print!("{:>8.3}", embb_rb_rate(chi, n, &cfg) / 1e6);
        }
        println!();
    }

    println!("\nURLLC rate per RB (kbit/s) at x = {x:e} by mini-slots used");
    for sinr_db in [0.0, 10.0, 20.0] {
        let chi = 10f64.powf(sinr_db / 10.0);
        let row: Vec<String> = (1..=cfg.num_minislots())
            .map(|n| urllc_rb_rate(chi, n, x, &cfg).map(|r| format!("{:>8.1}", r / 1e3)))
            .collect::<orsched::Result<_>>()?;
        println!("{sinr_db:>7.0}{}", row.join(""));
    }

    println!("\nerror probability when sending at the URLLC rate (should recover x)");
    for n in [1, 2, 4] {
        let chi = 10.0;
        let w = urllc_blocklength(n, &cfg)?;
        let bits_per_use = urllc_rb_rate(chi, n, x, &cfg)? / (cfg.radio.rb_bandwidth * n as f64 / cfg.num_minislots() as f64);
        println!("  {n} mini-slots, W = {w:>3} uses: {:e}", decode_error_prob(chi, w, bits_per_use));
    }
    Ok(())
}
