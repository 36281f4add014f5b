//! Seed handling.
//!
//! Every random stream in the crate is derived from one 64-bit master seed
//! through a counter-based split: the child seed for `(stream, counter)` is
//! `splitmix64(seed ^ splitmix64(stream) ^ splitmix64(counter + golden))`,
//! which then seeds a ChaCha8 generator. Replicas can therefore be computed in
//! any order, on any thread, and reproduce bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// One round of the SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Named sub-streams. The numeric value is part of the reproducibility contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Signal = 1,
    Kernel = 2,
    Rotation = 3,
    Content = 4,
    Noise = 5,
    Init = 6,
    Shuffle = 7,
    Batch = 8,
    Probe = 9,
    Meta = 10,
    Permutation = 11,
}

/// Derive the child seed for `(stream, counter)`.
pub fn split_seed(seed: u64, stream: Stream, counter: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream as u64) ^ splitmix64(counter.wrapping_add(GOLDEN)))
}

/// Generator for `(stream, counter)` under `seed`.
pub fn stream_rng(seed: u64, stream: Stream, counter: u64) -> Rng {
    Rng::seed_from_u64(split_seed(seed, stream, counter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream_rng(7, Stream::Signal, 3).random();
        let b: u64 = stream_rng(7, Stream::Signal, 3).random();
        let c: u64 = stream_rng(7, Stream::Signal, 4).random();
        let d: u64 = stream_rng(7, Stream::Kernel, 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}
