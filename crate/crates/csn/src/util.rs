//! Small shared helpers.

/// SplitMix64 finalizer; decorrelates nearby seeds.
pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent stream seed from a base seed and a branch tag.
pub(crate) fn mix_seed(seed: u64, branch: u64) -> u64 {
    splitmix64(seed ^ branch.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branches_decorrelate() {
        let a = mix_seed(42, 1);
        let b = mix_seed(42, 2);
        let c = mix_seed(43, 1);
        assert_ne!(a, b);
        assert_ne!(a, c);
    }
}
