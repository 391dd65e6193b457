//! Per-trial seed derivation.
//!
//! Every trial owns an independent random stream seeded by a documented,
//! stable hash of the master seed and the trial index. No trial ever reuses
//! another's generator state, so trials can run on any number of workers in
//! any order without changing a single drawn number.

/// SplitMix64 finalizer: the standard 64-bit avalanche mix
/// (xorshift-multiply rounds with the Stafford mix13 constants).
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial_index` under `master_seed`: the SplitMix64 mix of
/// the master seed advanced by `trial_index + 1` golden-ratio increments.
/// The offset keeps trial 0 from degenerating to a mix of the bare master
/// seed, which also feeds other derivations.
pub fn trial_seed(master_seed: u64, trial_index: u64) -> u64 {
    splitmix64(
        master_seed.wrapping_add((trial_index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
    )
}
