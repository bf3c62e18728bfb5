//! Splittable random streams.
//!
//! Every (experiment, trial, role) triple gets its own ChaCha8 stream under a master
//! seed, so trials can run in any order or in parallel and still reproduce bit-exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Which cloud of a trial a stream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Source,
    Target,
    Auxiliary,
}

impl Role {
    fn tag(self) -> u64 {
        match self {
            Role::Source => 0x5eed_0001,
            Role::Target => 0x5eed_0002,
            Role::Auxiliary => 0x5eed_0003,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream id for a (experiment, trial, role) triple.
pub fn stream_id(experiment: u64, trial: u64, role: Role) -> u64 {
    splitmix64(splitmix64(splitmix64(experiment) ^ trial) ^ role.tag())
}

/// Independent generator for one (experiment, trial, role) triple.
pub fn stream(master_seed: u64, experiment: u64, trial: u64, role: Role) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id(experiment, trial, role));
    rng
}
