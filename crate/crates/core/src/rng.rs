//! Seeded, splittable random streams.
//!
//! Every stream is a ChaCha8 generator keyed from a 64-bit seed. Child streams
//! are keyed from `(parent seed, label)` through FNV-1a and a SplitMix64
//! finalizer, so they never depend on how many draws the parent has made.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ALGORITHM: &str = "chacha8";

#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn algorithm(&self) -> &'static str {
        ALGORITHM
    }

    /// Seed of the child stream `label`.
    pub fn child_seed(&self, label: &str) -> u64 {
        derive_seed(self.seed, label)
    }

    pub fn child(&self, label: &str) -> SeededRng {
        SeededRng::new(self.child_seed(label))
    }

    /// Child stream for an indexed item (rollout `i`, instance `i`, ...).
    pub fn child_indexed(&self, label: &str, index: u64) -> SeededRng {
        SeededRng::new(splitmix64(derive_seed(self.seed, label) ^ splitmix64(index)))
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

pub fn derive_seed(seed: u64, label: &str) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = FNV_OFFSET;
    for b in seed.to_le_bytes().iter().chain(label.as_bytes()) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(h)
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = SeededRng::new(42);
        let mut b = SeededRng::new(42);
        for _ in 0..10_000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn children_ignore_parent_draws() {
        let fresh = SeededRng::new(7);
        let mut used = SeededRng::new(7);
        for _ in 0..100 {
            used.next_u32();
        }
        let mut c1 = fresh.child("maze");
        let mut c2 = used.child("maze");
        assert_eq!(c1.next_u64(), c2.next_u64());
        assert_ne!(fresh.child_seed("maze"), fresh.child_seed("sokoban"));
        assert_ne!(
            fresh.child_indexed("rollout", 0).seed(),
            fresh.child_indexed("rollout", 1).seed()
        );
    }

    #[test]
    fn known_first_draw_is_stable() {
        // Freezes the stream so accidental algorithm changes are caught.
        let mut r = SeededRng::new(0);
        let first = r.next_u64();
        assert_eq!(first, 13080132717333068652);
        assert_eq!(derive_seed(0, "maze"), 845965602568241206);
    }
}
