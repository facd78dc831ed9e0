//! Prints the default scenario as TOML, its latency budget, and what validation reports
//! for a broken variant.
//!
//! `cargo run --example scenario_config`

use orsched::SimConfig;

fn main() {
    let cfg = SimConfig::default();
    print!("{}", cfg.to_toml_string());

    let budget = cfg.latency_budget_check();
    println!(
        "\nworst-case URLLC latency: {} mini-slots = {:.3} ms (within budget: {})",
        budget.minislots,
        budget.seconds * 1e3,
        budget.within_budget
    );
    println!("config hash {}", cfg.hash());

    let mut broken = cfg.clone();
    broken.radio.symbols_per_tti = 13;
    broken.harq.max_harq_attempts = 3;
    match broken.validate() {
        Ok(_) => println!("unexpectedly valid"),
        Err(e) => println!("broken variant rejected: {e}"),
    }
}
