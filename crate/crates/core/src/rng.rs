//! Deterministic random-number plumbing.
//!
//! Every randomized routine in the crate takes an explicit 64-bit seed and
//! derives its generator with [`rng_from`]. The generator is ChaCha8, which
//! has a portable, stable stream for a given seed on every platform and
//! every build.
//!
//! Independent random streams are split from a parent seed with
//! [`child_seed`]: the child is a 64-bit hash of the parent seed, an ASCII
//! role tag (for example `"sample"`, `"noise"`, `"restart"`) and an index.
//! Role tags keep logically distinct streams (the index sample, the noise
//! draw, solver restarts, …) decorrelated even when they share a parent
//! seed, and make every stream reproducible in isolation.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The crate-wide generator type.
pub type Rng = ChaCha8Rng;

/// Build the generator for `seed`.
pub fn rng_from(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Derive the seed of an independent child stream.
///
/// The hash is FNV-1a over `(parent, tag, index)` followed by a SplitMix64
/// finalizer; both are fixed constants of the crate, so derived streams are
/// stable across releases and platforms.
pub fn child_seed(parent: u64, tag: &str, index: u64) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x1000_0000_01b3;

    let mut h = FNV_OFFSET;
    for b in parent
        .to_le_bytes()
        .iter()
        .chain(tag.as_bytes())
        .chain(index.to_le_bytes().iter())
    {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(h)
}

/// SplitMix64 finalizer; diffuses low-entropy inputs across all 64 bits.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn same_inputs_same_stream() {
        let mut a = rng_from(42);
        let mut b = rng_from(42);
        for _ in 0..16 {
            assert_eq!(a.random::<u64>(), b.random::<u64>());
        }
    }

    #[test]
    fn child_seeds_differ_by_tag_and_index() {
        let base = child_seed(7, "sample", 0);
        assert_ne!(base, child_seed(7, "noise", 0));
        assert_ne!(base, child_seed(7, "sample", 1));
        assert_ne!(base, child_seed(8, "sample", 0));
        // Deterministic: same inputs, same child.
        assert_eq!(base, child_seed(7, "sample", 0));
    }

    #[test]
    fn child_seeds_spread_over_small_ranges() {
        // 1024 children of consecutive indices should essentially never
        // collide if the hash diffuses properly.
        let mut seen: Vec<u64> = (0..1024).map(|i| child_seed(3, "trial", i)).collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 1024);
    }
}
