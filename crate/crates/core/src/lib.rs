//! Multi-cell eMBB/URLLC coexistence simulator and learning harness.
//!
//! The crate is organised bottom-up:
//!
//! - [`netmodel`]: scenario configuration and per-TTI decision containers.
//! - [`channel`]: pathloss + block fading and SINR evaluation.
//! - [`phyrates`]: punctured eMBB rates, finite-blocklength URLLC rates, Q-function.
//! - [`harq`]: URLLC arrivals, the HARQ pipeline and the outage estimator.
//! - [`env`]: the per-cell MDP (state, action decoding, reward, dual weight) and an
//!   exhaustive reference solver for tiny instances.
//! - [`drl`]: MLPs with analytic gradients, replay, DDPG with a Thompson-sampled actor ensemble.
//! - [`orchestrator`]: central trainer / per-cell executor split, checkpoints and evaluation.
//! - [`experiments`]: the command-level drivers behind the `orsched` binary.

pub mod channel;
pub mod drl;
pub mod env;
pub mod error;
pub mod experiments;
pub mod harq;
pub mod netmodel;
pub mod orchestrator;
pub mod phyrates;
pub mod rng;

pub use error::{Error, Result};
pub use netmodel::{AllocationDecision, SimConfig};
