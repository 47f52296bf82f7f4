//! Order-independent seed derivation.
//!
//! Every randomized tie-break draws from a value derived from the master seed
//! and the identity of the decision (document, character, expression), so the
//! outcome never depends on evaluation order or thread count.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over bytes, then mixed.
pub fn hash_str(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    mix64(h)
}

/// Chains `parts` into `seed`.
pub fn derive(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(mix64(seed), |acc, p| mix64(acc ^ p.wrapping_mul(GOLDEN)))
}

/// Uniform index in `0..n` for a derived seed. `n` must be nonzero.
pub fn pick(seed: u64, n: usize) -> usize {
    ((u128::from(mix64(seed)) * n as u128) >> 64) as usize
}
