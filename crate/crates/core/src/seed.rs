//! Stable seed derivation for per-subject and per-fold randomness.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a master seed with a list of string/integer tags. Independent of
/// platform and of thread scheduling.
pub fn derive_seed(master: u64, tags: &[&str]) -> u64 {
    let mut h = FNV_OFFSET;
    for byte in master.to_le_bytes() {
        h = (h ^ u64::from(byte)).wrapping_mul(FNV_PRIME);
    }
    for tag in tags {
        for &byte in tag.as_bytes() {
            h = (h ^ u64::from(byte)).wrapping_mul(FNV_PRIME);
        }
        // separator so that ["ab", "c"] != ["a", "bc"]
        h = (h ^ 0xff).wrapping_mul(FNV_PRIME);
    }
    splitmix64(h)
}

/// Seed of one cross-validation fold.
pub fn fold_seed(master: u64, subject: &str, fold: usize) -> u64 {
    derive_seed(master, &[subject, &fold.to_string()])
}
