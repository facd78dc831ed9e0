//! Trains the ensemble on the two-cell desk scenario and reports progress.
//!
//! `cargo run --release --example train_desk -- [steps] [out_dir]`

use std::path::PathBuf;
use std::time::Instant;

use orsched::experiments::{desk_config, init_logging};
use orsched::orchestrator::TrainRun;

fn main() -> orsched::Result<()> {
    init_logging();
    let mut args = std::env::args().skip(1);
    let steps: u64 = args.next().map(|s| s.parse().expect("steps")).unwrap_or(5_000);
    let out: Option<PathBuf> = args.next().map(PathBuf::from);

    let cfg = desk_config();
    let mut run = TrainRun::new(cfg.clone(), cfg.run.rng_seed, out.as_deref())?;
    let started = Instant::now();
    let chunk = (steps / 10).max(1);
    let mut done = 0;
    while done < steps {
        let n = chunk.min(steps - done);
        run.run(n)?;
        done += n;
        println!(
            "step {:>6}  episodes {:>4}  mean reward of last episode {:>8.3}  critic loss {:>10.4e}  {:.1}s",
            run.step,
            run.episode,
            run.last_episode_reward,
            run.last_stats.as_ref().map_or(f64::NAN, |s| s.critic_loss),
            started.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
