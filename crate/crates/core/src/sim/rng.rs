//! Keyed random streams: one independent ChaCha stream per
//! (seed, location, epoch, purpose), so parallel generation is reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Noise = 1,
    FaultSubset = 2,
    Geometry = 3,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn keyed_stream(seed: u64, location: u64, epoch: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let key = splitmix64(splitmix64(splitmix64(location) ^ epoch) ^ purpose as u64);
    rng.set_stream(key);
    rng
}
