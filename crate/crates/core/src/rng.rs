//! Seeded, splittable random streams.
//!
//! Every stream is a ChaCha20 generator. A [`SeedStream`] is an address: a
//! master seed plus a path of integer labels (cell, trial, stage, ...). The
//! path is folded into a 64-bit stream id with the SplitMix64 finalizer, and
//! the generator is `ChaCha20Rng::seed_from_u64(master)` switched to that
//! stream id. Two addresses that differ in any label yield independent
//! streams, and the same address always replays the same values regardless
//! of which thread evaluates it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Concrete generator type used throughout the crate.
pub type StreamRng = ChaCha20Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedStream {
    master: u64,
    id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedStream {
    pub fn new(master: u64) -> Self {
        SeedStream { master, id: 0 }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Child stream addressed by `label`.
    pub fn child(&self, label: u64) -> Self {
        SeedStream { master: self.master, id: splitmix64(self.id ^ splitmix64(label.wrapping_add(1))) }
    }

    /// Child stream addressed by a path of labels.
    pub fn path(&self, labels: &[u64]) -> Self {
        labels.iter().fold(*self, |s, &l| s.child(l))
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.master);
        rng.set_stream(self.id);
        rng
    }
}

/// Shorthand for a generator on the root stream of `seed`.
pub fn seeded(seed: u64) -> StreamRng {
    SeedStream::new(seed).rng()
}
