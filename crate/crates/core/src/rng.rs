//! Keyed, counter-based random number streams.
//!
//! Every stochastic routine in this crate draws from a [`ChaCha12Rng`] keyed
//! by a `(seed, stream)` pair. Stream `i` is independent of how many draws
//! other streams consumed, so replicates can run in any order (or in
//! parallel) and still produce bit-identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Build the generator for stream `stream` of base seed `seed`.
pub fn keyed_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&stream.to_le_bytes());
    key[16..24].copy_from_slice(b"fbmdrift");
    ChaCha12Rng::from_seed(key)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the simulation seed for one Monte Carlo replicate.
///
/// The mapping is injective in practice (SplitMix64 chain over the cell
/// coordinates), so cells and replicates never share driver noise.
pub fn replicate_seed(base_seed: u64, h_index: usize, n: u32, replicate: usize) -> u64 {
    let mut s = splitmix64(base_seed);
    s = splitmix64(s ^ (h_index as u64).wrapping_mul(0xA24B_AED4_963E_E407));
    s = splitmix64(s ^ (u64::from(n)).wrapping_mul(0x9FB2_1C65_1E98_DF25));
    splitmix64(s ^ replicate as u64)
}
