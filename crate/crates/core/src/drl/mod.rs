//! Deep deterministic policy gradient with a bootstrapped actor ensemble.

mod agent;
pub mod checkpoint;
mod mlp;
mod optim;
mod replay;

pub use agent::{
    add_gaussian_noise, epsilon_greedy_act, thompson_select, AgentShape, EnsembleAgent, Hyper, TrainStats,
};
pub use mlp::{Activation, Cache, Dense, Grads, Mlp};
pub use optim::Optimizer;
pub use replay::{Batch, ReplayBuffer};

use crate::env::{ActionLayout, CellState};
use crate::netmodel::SimConfig;

/// Agent dimensions implied by a scenario.
pub fn shape_for_config(cfg: &SimConfig) -> AgentShape {
    AgentShape {
        state_dim: CellState::len_for(cfg),
        action_dim: ActionLayout::new(cfg).len(),
        hidden_width: cfg.learning.hidden_width,
        hidden_layers: cfg.learning.hidden_layers,
        ensemble: cfg.ensemble_len(),
    }
}

pub fn agent_for_config(cfg: &SimConfig, seed: u64) -> EnsembleAgent {
    EnsembleAgent::new(shape_for_config(cfg), Hyper::from_config(cfg), seed)
}
