//! Counter-based seed derivation.
//!
//! Every replicate, training episode and worker stream gets its own seed
//! derived from a single master seed and a short stream of indices. The mix
//! function below is the published scheme: results must stay stable across
//! releases because sweep output is keyed on it.

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `master` and an index stream.
///
/// Defined as `fold(splitmix64(master), |acc, w| splitmix64(acc ^ w))`, so
/// adding indices at the end never perturbs seeds derived from a prefix.
pub fn derive(master: u64, stream: &[u64]) -> u64 {
    stream
        .iter()
        .fold(splitmix64(master), |acc, &w| splitmix64(acc ^ w))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_is_stable() {
        // Frozen values: these pin the published mixing scheme.
        assert_eq!(derive(0, &[]), 16294208416658607535);
        assert_eq!(derive(42, &[1, 2, 3]), 4591807362961508349);
    }

    #[test]
    fn distinct_indices_give_distinct_seeds() {
        let mut seen = std::collections::HashSet::new();
        for a in 0..10u64 {
            for b in 0..10u64 {
                for c in 0..10u64 {
                    assert!(seen.insert(derive(7, &[a, b, c])));
                }
            }
        }
    }

    #[test]
    fn prefix_and_extension_differ() {
        assert_ne!(derive(9, &[4]), derive(9, &[4, 0]));
    }
}
