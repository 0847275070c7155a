//! Deterministic random streams.
//!
//! Every random draw in the library flows through a [`SeedStream`] derived
//! from a master seed and a (phase, index) pair. Parallel work derives one
//! stream per task up front, so results do not depend on thread scheduling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Phase tags for substream derivation. Keeping these distinct guarantees
/// that e.g. training valuations never reuse the verification stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    TrainValuation = 1,
    VerifyValuation = 2,
    TrainTrajectories = 3,
    VerifyTrajectories = 4,
    FreshValuation = 5,
    Probe = 6,
    Other = 7,
}

/// A seeded ChaCha stream.
pub struct SeedStream(ChaCha12Rng);

impl SeedStream {
    /// Derives an independent stream from (master seed, phase, index) by
    /// splitmix64 mixing. The same triple always yields the same stream.
    pub fn derive(master: u64, phase: u64, index: u64) -> SeedStream {
        let mut x = master;
        x = splitmix64(x ^ 0x9e3779b97f4a7c15u64.wrapping_mul(phase.wrapping_add(1)));
        x = splitmix64(x ^ 0xbf58476d1ce4e5b9u64.wrapping_mul(index.wrapping_add(1)));
        let mut seed = [0u8; 32];
        let mut state = x;
        for chunk in seed.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        SeedStream(ChaCha12Rng::from_seed(seed))
    }

    pub fn for_phase(master: u64, phase: Phase, index: u64) -> SeedStream {
        SeedStream::derive(master, phase as u64, index)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

impl RngCore for SeedStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}
