//! Reproducible random streams.
//!
//! Every stochastic operation draws from a ChaCha8 stream keyed by
//! `(master seed, operation tag, index)`. Work split across threads by index
//! therefore sees the same numbers regardless of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Handle from which per-task streams are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamSeed {
    master: u64,
}

impl StreamSeed {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Stream for task `index` of the operation identified by `tag`.
    pub fn stream(&self, tag: &str, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master ^ fnv1a(tag.as_bytes()));
        rng.set_stream(splitmix64(index));
        rng
    }

    /// A child seed, for handing a sub-operation its own key space.
    pub fn child(&self, tag: &str, index: u64) -> StreamSeed {
        StreamSeed {
            master: splitmix64(self.master ^ fnv1a(tag.as_bytes()) ^ splitmix64(index)),
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
