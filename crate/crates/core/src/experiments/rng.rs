//! Keyed random streams.
//!
//! Every draw comes from a ChaCha20 stream whose 256-bit key holds the run seed
//! (little-endian in the first 8 bytes, rest zero) and whose 64-bit stream id packs
//! `purpose << 56 | instance << 24 | stage`. Streams for different
//! `(instance, stage, purpose)` triples never overlap, so adding cells or instances
//! leaves every other draw unchanged.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use statrs::distribution::{ContinuousCDF, Normal};

/// What a stream is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    InitialState = 1,
    IdealMatrix = 2,
    IdealControl = 3,
    Noise = 4,
}

const MAX_INSTANCE: u64 = 1 << 32;
const MAX_STAGE: u64 = 1 << 24;

/// Uniform and standard-normal draws from one keyed stream.
pub struct Stream {
    rng: ChaCha20Rng,
    normal: Normal,
}

impl Stream {
    pub fn new(seed: u64, instance: usize, stage: usize, purpose: Purpose) -> Self {
        assert!(
            (instance as u64) < MAX_INSTANCE && (stage as u64) < MAX_STAGE,
            "stream index out of range"
        );
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut rng = ChaCha20Rng::from_seed(key);
        rng.set_stream(((purpose as u64) << 56) | ((instance as u64) << 24) | stage as u64);
        Self {
            rng,
            normal: Normal::standard(),
        }
    }

    /// Uniform on the open interval `(0, 1)` with 53-bit resolution.
    pub fn open01(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.open01()
    }

    /// Standard normal by inverse CDF.
    pub fn standard_normal(&mut self) -> f64 {
        let p = self.open01();
        self.normal.inverse_cdf(p)
    }
}
