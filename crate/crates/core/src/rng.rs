//! Seeded randomness with counter-based splitting.
//!
//! Every random quantity in the crate is drawn from a [`SeedKey`]. A key is a
//! 64-bit value; [`SeedKey::child`] derives an independent key for a named
//! sub-task and [`SeedKey::stream`] opens the ChaCha8 stream with the given
//! stream id. Bulk sampling splits `n` draws into fixed chunks of
//! [`CHUNK`] draws, chunk `c` using stream `c`, so the values do not depend on
//! how chunks are scheduled across threads.
//!
//! Key derivation: `child(label) = splitmix64(key ^ splitmix64(label))`,
//! with string labels hashed by FNV-1a first.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Draws per chunk when sampling in bulk.
pub const CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedKey(pub u64);

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325_u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

impl SeedKey {
    pub fn new(master: u64) -> Self {
        SeedKey(master)
    }

    /// Key for a named sub-task.
    pub fn child(self, label: &str) -> Self {
        self.index(fnv1a(label))
    }

    /// Key for the `i`-th repetition of an experiment.
    pub fn index(self, i: u64) -> Self {
        SeedKey(splitmix64(self.0 ^ splitmix64(i)))
    }

    pub fn stream(self, id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(id);
        rng
    }

    /// Draws `n` values, chunk by chunk, in parallel when a thread pool is
    /// available. The result is independent of scheduling.
    pub fn fill<T, F>(self, n: usize, draw: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut ChaCha8Rng) -> T + Sync,
    {
        let chunks = n.div_ceil(CHUNK);
        let parts: Vec<Vec<T>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let len = CHUNK.min(n - c * CHUNK);
                let mut rng = self.stream(c as u64);
                (0..len).map(|_| draw(&mut rng)).collect()
            })
            .collect();
        parts.into_iter().flatten().collect()
    }
}
