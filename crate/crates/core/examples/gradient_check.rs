//! Finite-difference checks of the MLP backward pass, then a few DDPG updates of a small
//! ensemble on a synthetic replay buffer.
//!
//! `cargo run --release --example gradient_check`

use rand::Rng;

use orsched::drl::{AgentShape, EnsembleAgent, Hyper, ReplayBuffer};
use orsched::env::Experience;
use orsched::experiments::{gradient_check, tiny_config};
use orsched::rng;

fn main() -> orsched::Result<()> {
    let mut r = rng::stream(31, rng::tag::AGENT_INIT);
    let errors: Vec<f64> = (0..20).map(|_| gradient_check(&mut r)).collect();
    println!("worst relative gradient error over 20 random nets: {:.2e}", errors.iter().cloned().fold(0.0, f64::max));

    let cfg = tiny_config();
    let shape = AgentShape { state_dim: 4, action_dim: 3, hidden_width: 32, hidden_layers: 2, ensemble: 3 };
    let mut agent = EnsembleAgent::new(shape, Hyper::from_config(&cfg), 5);
    let mut replay = ReplayBuffer::new(1_000, 4, 3, 3, 0.5);
    for _ in 0..500 {
        let state: Vec<f64> = (0..4).map(|_| r.random_range(-1.0..1.0)).collect();
        let action: Vec<f64> = (0..3).map(|_| r.random_range(-1.0..1.0)).collect();
        let reward = -action.iter().zip(&state).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
        let next_state = (0..4).map(|_| r.random_range(-1.0..1.0)).collect();
        let e = Experience { cell: 0, tti: 0, state, action, reward, next_state };
        replay.push(&e, &mut r)?;
    }
    for step in 0..=200 {
        let batch = replay.sample(64, &mut r)?;
        let stats = agent.train_step(&batch);
        if step % 50 == 0 {
            println!("update {step:>3}: critic loss {:.4}", stats.critic_loss);
        }
    }
    Ok(())
}
