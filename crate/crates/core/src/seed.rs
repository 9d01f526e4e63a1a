//! Seed derivation.
//!
//! Every random stream is keyed by `(seed, purpose, index)` so that results do
//! not depend on evaluation order or on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a derived stream is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Synthesis = 0x5359_4e54,
    Tracking = 0x5452_434b,
    Prior = 0x5052_4952,
    Resample = 0x5253_4d50,
    Run = 0x5255_4e53,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, purpose: Purpose, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(purpose as u64)) ^ index)
}

pub fn stream(seed: u64, purpose: Purpose, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, purpose, index))
}

/// Child seed for the `index`-th element under an already derived seed.
pub fn child_seed(parent: u64, index: u64) -> u64 {
    splitmix64(parent ^ splitmix64(index.wrapping_add(1)))
}

pub fn child_stream(parent: u64, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(child_seed(parent, index))
}
