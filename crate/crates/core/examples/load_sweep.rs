//! Mean eMBB rate and outage across URLLC loads for the untrained ensemble, a
//! uniformly random policy, and optionally a trained checkpoint.
//!
//! `cargo run --release --example load_sweep -- [checkpoint]`

use orsched::drl::{agent_for_config, checkpoint};
use orsched::experiments::desk_config;
use orsched::orchestrator::{run_evaluation, EvalPolicy};

fn main() -> orsched::Result<()> {
    let cfg = desk_config();
    let trained = std::env::args().nth(1).map(|p| checkpoint::load(p, &cfg, false)).transpose()?;
    let init = agent_for_config(&cfg, 1);
    let phis = [0.0, 20.0, 40.0, 80.0, 120.0];
    println!("{:>6} {:>10} {:>14} {:>8} {:>10}", "phi", "policy", "embb Mbit/s", "outage", "win ok");
    let mut cases = vec![("init", &init, EvalPolicy::Thompson), ("random", &init, EvalPolicy::Random)];
    if let Some(t) = trained.as_ref() {
        cases.push(("trained", t, EvalPolicy::Thompson));
    }
    for (name, agent, policy) in cases {
        for phi in phis {
            let r = run_evaluation(agent, &cfg, policy, phi, 4, 99)?;
            println!(
                "{phi:>6} {name:>10} {:>14.3} {:>8.4} {:>10.3}",
                r.mean_embb_rate_bps / 1e6,
                r.mean_outage,
                r.fraction_windows_within
            );
        }
    }
    Ok(())
}
