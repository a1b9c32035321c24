//! Seeded random streams.
//!
//! Every entity (RB, device, episode) draws from its own ChaCha stream whose
//! seed is a stable hash of the root seed and the entity's coordinates, so
//! adding a device never shifts the draws of the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    RbTruth = 1,
    Observation = 2,
    Policy = 3,
    Episode = 4,
    Topology = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable 64-bit hash of a root seed and a coordinate tuple.
pub fn derive_seed(root: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(root), |h, &p| splitmix64(h ^ splitmix64(p)))
}

pub fn stream(root: u64, family: Stream, entity: u64, frame: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, &[family as u64, entity, frame]))
}
