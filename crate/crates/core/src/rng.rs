//! Named random streams.
//!
//! Every draw in a run comes from a ChaCha8 stream keyed by the run seed and
//! selected by `(agent, purpose)`, so streams are independent of each other and
//! of the order in which agents are processed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for; part of the stream selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u16)]
pub enum Purpose {
    Deploy = 1,
    Move = 2,
    TargetPlacement = 3,
    TargetMove = 4,
    ConsensusInit = 5,
    FormationInit = 6,
    Permutation = 7,
    Conflict = 8,
}

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64, agent: u64, purpose: Purpose) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((agent << 16) | purpose as u64);
    rng
}

/// One stream per agent for the given purpose.
pub fn streams(seed: u64, n: usize, purpose: Purpose) -> Vec<StreamRng> {
    (0..n as u64).map(|i| stream(seed, i, purpose)).collect()
}
