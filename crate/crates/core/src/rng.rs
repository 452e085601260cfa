//! Named random substreams derived from one experiment seed.
//!
//! Every stage draws from its own ChaCha stream so that changing how many
//! numbers one stage consumes never shifts another stage's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const NETWORK_STREAM: &str = "network";
pub const QLEARNING_STREAM: &str = "qlearning";
pub const FLEET_STREAM: &str = "fleet";
pub const FLEET_DEMAND_STREAM: &str = "fleet-demand";

/// FNV-1a over the stream name; stable across platforms and builds.
fn stream_id(name: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in name.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

pub fn substream(seed: u64, name: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(name));
    rng
}
