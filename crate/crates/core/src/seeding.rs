//! Seed splitting.
//!
//! A run has one root 64-bit seed. Named child streams are derived with
//! `child = mix64(root ^ mix64(fnv1a64(name)))` and indexed sub-streams with
//! `mix64(parent + GOLDEN * (index + 1))`, where `mix64` is the SplitMix64
//! finalizer. Every random generator in the crate is a `ChaCha8Rng` seeded
//! from one of these values, so any implementation can reproduce the streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a over the UTF-8 bytes of `name`.
pub fn fnv1a64(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

pub fn child_seed(root: u64, name: &str) -> u64 {
    mix64(root ^ mix64(fnv1a64(name)))
}

pub fn indexed_seed(parent: u64, index: u64) -> u64 {
    mix64(parent.wrapping_add(GOLDEN.wrapping_mul(index.wrapping_add(1))))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Named streams used by the trainer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    pub root: u64,
}

impl SeedTree {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    pub fn stream(&self, name: &str) -> u64 {
        child_seed(self.root, name)
    }

    pub fn indexed(&self, name: &str, index: u64) -> u64 {
        indexed_seed(self.stream(name), index)
    }

    pub fn rng(&self, name: &str, index: u64) -> ChaCha8Rng {
        rng_from_seed(self.indexed(name, index))
    }
}
