//! Seed derivation shared by every sampled experiment.

/// One SplitMix64 step.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Mix a base seed with integer coordinates (grid indices, sample number).
pub fn derive_seed(base: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(splitmix64(base), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}
