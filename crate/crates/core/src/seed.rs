//! Deterministic per-task RNG streams.
//!
//! Every trial draws from a ChaCha8 stream keyed by `(master, stage, trial, lane)`,
//! so results do not depend on scheduling order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Pipeline stages that consume randomness. The discriminant is mixed into the key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Phantm = 1,
    Breeding = 2,
    Qec = 3,
    Bootstrap = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit key for a stream. Also stored in run records as the trial seed.
pub fn stream_key(master: u64, stage: Stage, trial: u64, lane: u64) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ stage as u64);
    h = splitmix64(h ^ trial);
    splitmix64(h ^ lane.rotate_left(32))
}

pub fn seed_plan(master: u64, stage: Stage, trial: u64, lane: u64) -> ChaCha8Rng {
    let key = stream_key(master, stage, trial, lane);
    let mut seed = [0u8; 32];
    for (i, chunk) in seed.chunks_mut(8).enumerate() {
        chunk.copy_from_slice(&splitmix64(key ^ i as u64).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(lane);
    rng
}
