//! Deterministic seed derivation.
//!
//! Every random draw in this crate flows through a ChaCha8 generator seeded
//! from `(user seed, call-site salt, lane)`. Lanes let per-sample work run on
//! independent streams, so parallel and sequential execution produce
//! identical output.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const SALT_MESH_SAMPLE: u64 = 0x4d45_5348;
pub(crate) const SALT_FREE_SAMPLE: u64 = 0x4652_4545;
pub(crate) const SALT_SUBSEGMENT: u64 = 0x5355_4253;
pub(crate) const SALT_SUBSET: u64 = 0x5342_5354;
pub(crate) const SALT_DOMINANCE: u64 = 0x444f_4d49;
pub(crate) const SALT_COMPLEMENT: u64 = 0x434f_4d50;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Folds a seed with salts into a fresh 64-bit seed.
pub(crate) fn derive(seed: u64, salts: &[u64]) -> u64 {
    let mut acc = splitmix64(seed ^ 0x6a09_e667_f3bc_c908);
    for &s in salts {
        acc = splitmix64(acc ^ splitmix64(s));
    }
    acc
}

/// A deterministic generator for the given seed and salt path.
pub(crate) fn rng_for(seed: u64, salts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, salts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derivation_is_stable_and_salt_sensitive() {
        assert_eq!(derive(7, &[1, 2]), derive(7, &[1, 2]));
        assert_ne!(derive(7, &[1, 2]), derive(7, &[2, 1]));
        assert_ne!(derive(7, &[1, 2]), derive(8, &[1, 2]));
    }

    #[test]
    fn rng_streams_repeat() {
        let a: u64 = rng_for(42, &[SALT_MESH_SAMPLE, 3]).gen();
        let b: u64 = rng_for(42, &[SALT_MESH_SAMPLE, 3]).gen();
        assert_eq!(a, b);
    }
}
