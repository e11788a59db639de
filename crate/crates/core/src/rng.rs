//! Seeded random streams.
//!
//! Every iteration (or Monte Carlo trial) gets its own ChaCha8 stream seeded
//! from `mix(master_seed, index)`, so results do not depend on how the work
//! is split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Sub-seed for stream `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master ^ 0x9e37_79b9_7f4a_7c15).wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}

pub fn stream(master: u64, index: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, index))
}

pub fn stream_from_seed(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform destination slot in `0..schedule_count`.
///
/// Shared by the allocator and the probabilistic estimators so both exercise
/// the same sampling path.
#[inline]
pub fn sample_slot<R: Rng + ?Sized>(rng: &mut R, schedule_count: usize) -> usize {
    rng.gen_range(0..schedule_count)
}
