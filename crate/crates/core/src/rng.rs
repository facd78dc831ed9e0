//! Seeded random streams.
//!
//! Every stochastic component draws from its own ChaCha stream derived from the
//! run seed and a fixed stream tag, so adding draws in one component never shifts
//! the sequence seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type Stream = ChaCha12Rng;

/// Stream tags. Values are part of the reproducibility contract.
pub mod tag {
    pub const PLACEMENT: u64 = 1;
    pub const CHANNEL: u64 = 2;
    pub const ARRIVALS: u64 = 3;
    pub const HARQ: u64 = 4;
    pub const AGENT_INIT: u64 = 5;
    pub const REPLAY_MASK: u64 = 6;
    pub const REPLAY_SAMPLE: u64 = 7;
    pub const THOMPSON: u64 = 8;
    pub const EXPLORATION: u64 = 9;
    pub const LOAD: u64 = 10;
}

pub fn stream(seed: u64, tag: u64) -> Stream {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng
}

/// A stream further split by an index (e.g. per cell or per executor).
pub fn substream(seed: u64, tag: u64, index: u64) -> Stream {
    let mixed = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    stream(mixed, tag)
}
