//! Scenario configuration and the per-cell, per-TTI decision containers.

mod config;
mod decision;

pub use config::{
    Exploration, Fading, HarqConfig, LatencyReport, LearningConfig, NetworkConfig, OptimizerKind,
    RadioConfig, RewardVariant, RunConfig, SimConfig, TrafficConfig, UrllcPower,
};
pub use decision::{
    AllocationDecision, ConstraintViolation, PowerAllocation, PuncturingMask, RbAssignment,
};
