//! Deterministic seed derivation.
//!
//! Experiment trials derive their own sub-seeds from a base seed plus counter
//! indices, so results are identical regardless of execution order, worker
//! count, or later grid extensions. The mixer is a fixed splitmix64 chain and
//! does not depend on the standard library hasher, which carries no stability
//! guarantee across toolchain versions.

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix an ordered tuple of parts into one sub-seed.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut acc = 0x243F_6A88_85A3_08D3; // arbitrary fixed start
    for &p in parts {
        acc = splitmix64(acc ^ p);
    }
    acc
}
