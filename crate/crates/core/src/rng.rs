//! Seed derivation. Every stochastic stream in an episode is a ChaCha8
//! generator keyed by a 64-bit hash of its parent seed and a stream tag.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive hash of two words.
pub fn hash64(a: u64, b: u64) -> u64 {
    mix64(mix64(a) ^ b.rotate_left(17) ^ 0xA076_1D64_78BD_642F)
}

/// Stream tags keep independent consumers of one episode seed apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    WindBase = 1,
    WindJitter = 2,
    Fire = 3,
    Policy = 4,
    Update = 5,
    Baseline = 6,
    Init = 7,
}

pub fn stream_seed(seed: u64, stream: Stream) -> u64 {
    hash64(seed, stream as u64)
}

pub fn stream_rng(seed: u64, stream: Stream) -> StreamRng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, stream))
}

/// Uniform in `[0, 1)` from the top 53 bits of a hash.
pub fn unit_from_hash(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
