//! Deterministic splittable randomness.
//!
//! A root seed spawns independent ChaCha8 streams addressed by a purpose tag
//! and an index (usually the sample number). The stream for a sample depends
//! only on `(root, purpose, index)`, so samples come out identical no matter
//! how the work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Purpose tags keep the streams of different consumers apart.
pub mod purpose {
    pub const ENSEMBLE: u64 = 0x656e_7365_6d62;
    pub const LIMIT_LAW: u64 = 0x006c_696d_6974;
    pub const PILOT: u64 = 0x0070_696c_6f74;
    pub const SYNTHETIC: u64 = 0x7379_6e74;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RootSeed(pub u64);

impl RootSeed {
    /// Stream `index` of the family selected by `purpose` and `n`.
    pub fn stream(self, purpose: u64, n: usize, index: u64) -> Stream {
        let key = splitmix64(self.0 ^ splitmix64(purpose ^ splitmix64(n as u64)));
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(index);
        rng
    }
}

/// Uniform draw on `(0, 1]`; safe to take the logarithm of.
pub fn open_unit<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}
