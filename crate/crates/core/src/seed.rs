//! Seed fan-out. One user seed feeds every random stream in a run through
//! fixed, named child seeds so that streams never share state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named random streams derived from the root seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Split,
    Init,
    Dropout,
    Shuffle,
    Clt,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Split => 0x0053_504c_4954,
            Stream::Init => 0x494e_4954,
            Stream::Dropout => 0x4452_4f50,
            Stream::Shuffle => 0x5348_5546,
            Stream::Clt => 0x0043_4c54,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `splitmix64(root ^ splitmix64(tag))`.
pub fn child_seed(root: u64, stream: Stream) -> u64 {
    splitmix64(root ^ splitmix64(stream.tag()))
}

pub fn rng_for(root: u64, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(root, stream))
}
