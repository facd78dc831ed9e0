//! Evaluates a policy at one URLLC load and prints the CDF of per-window error
//! probabilities. Uses a checkpoint when one is given, otherwise an untrained ensemble.
//!
//! `cargo run --release --example error_cdf -- [phi] [checkpoint.bin]`

use orsched::drl::{agent_for_config, checkpoint};
use orsched::experiments::{cdf_rows, desk_config};
use orsched::orchestrator::{run_evaluation, EvalPolicy};

fn main() -> orsched::Result<()> {
    let mut args = std::env::args().skip(1);
    let phi: f64 = args.next().map(|s| s.parse().expect("phi")).unwrap_or(80.0);
    let cfg = desk_config();
    let agent = match args.next() {
        Some(path) => checkpoint::load(path, &cfg, false)?,
        None => agent_for_config(&cfg, 1),
    };
    let report = run_evaluation(&agent, &cfg, EvalPolicy::Thompson, phi, 100, 9)?;
    println!(
        "phi {phi}: mean eMBB {:.3} Mbit/s, per-TTI outage {:.4}, {} windows, {:.1}% within {}",
        report.mean_embb_rate_bps / 1e6,
        report.mean_outage,
        report.window_errors.len(),
        100.0 * report.fraction_windows_within,
        cfg.traffic.outage_target
    );
    println!("value,cum_fraction");
    for (v, c) in cdf_rows(&report.window_errors) {
        println!("{v},{c}");
    }
    Ok(())
}
