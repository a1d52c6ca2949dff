//! Platform-stable seed derivation.

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output finaliser. A bijection on `u64`.
#[inline]
pub const fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for worker `index` of `epoch` in the run seeded with `master`.
///
/// SplitMix64 absorbs the three words in order `master, epoch, index`:
/// starting from `state = 0`, each word `w` does
/// `state = mix64((state + GOLDEN_GAMMA) ^ w)` (wrapping add). Every step is a
/// bijection in `w`, so two indices never collide for the same `(master, epoch)`.
pub const fn derive_seed(master: u64, epoch: u64, index: u64) -> u64 {
    let mut state = 0u64;
    state = mix64(state.wrapping_add(GOLDEN_GAMMA) ^ master);
    state = mix64(state.wrapping_add(GOLDEN_GAMMA) ^ epoch);
    mix64(state.wrapping_add(GOLDEN_GAMMA) ^ index)
}
