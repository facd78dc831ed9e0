//! Solves a handful of tiny single-cell instances exhaustively and compares the optimum
//! with the best decision reachable by decoding random raw actions.
//!
//! `cargo run --release --example decoder_oracle -- [samples]`

use orsched::experiments::{compare_with_oracle, tiny_config, tiny_instance};
use orsched::rng;

fn main() -> orsched::Result<()> {
    let samples: usize = std::env::args().nth(1).map(|s| s.parse().expect("samples")).unwrap_or(20_000);
    let cfg = tiny_config();
    let mut r = rng::stream(21, rng::tag::PLACEMENT);
    println!("demand  oracle_pkts  oracle_mbps  decoded_pkts  decoded_mbps  ratio  above_oracle");
    for _ in 0..8 {
        let (chan, demand) = tiny_instance(&cfg, &mut r);
        let c = compare_with_oracle(&cfg, &chan, demand, samples, &mut r)?;
        println!(
            "{demand:>6}  {:>11}  {:>11.3}  {:>12}  {:>12.3}  {:>5.3}  {:>12}",
            c.oracle.value.delivered,
            c.oracle.value.embb_bps / 1e6,
            c.best_decoded.delivered,
            c.best_decoded.embb_bps / 1e6,
            c.ratio(),
            c.exceeded
        );
    }
    Ok(())
}
