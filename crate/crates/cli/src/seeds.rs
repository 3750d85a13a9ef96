//! Per-sample seed derivation. Every sample's seed is a pure function of
//! (master seed, campaign name, k, d_E, sample index), so any grid subset
//! reruns bit-identically in isolation and results cannot depend on how
//! samples were distributed over workers.

/// splitmix64 finalizer: the standard 64-bit avalanche mix.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Master seed for one sample's generator.
pub fn sample_seed(master: u64, campaign: &str, k: usize, d_e: usize, index: usize) -> u64 {
    let mut h = mix(master);
    for chunk in campaign.as_bytes().chunks(8) {
        let mut bytes = [0u8; 8];
        bytes[..chunk.len()].copy_from_slice(chunk);
        h = mix(h ^ u64::from_le_bytes(bytes));
    }
    h = mix(h ^ k as u64);
    h = mix(h ^ d_e as u64);
    h = mix(h ^ index as u64);
    h
}

/// Order-sensitive digest of a config's canonical text form, for manifest
/// staleness checks.
pub fn digest(text: &str) -> String {
    let mut h = 0x243f_6a88_85a3_08d3u64;
    for chunk in text.as_bytes().chunks(8) {
        let mut bytes = [0u8; 8];
        bytes[..chunk.len()].copy_from_slice(chunk);
        h = mix(h ^ u64::from_le_bytes(bytes));
    }
    format!("{h:016x}")
}
