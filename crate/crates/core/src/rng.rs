//! Deterministic random substreams.
//!
//! Every stochastic stage draws from its own ChaCha stream keyed by the
//! master seed, a stage tag and an index (cohort age, restart number), so
//! results do not depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stage {
    Progression = 1,
    Screening = 2,
    Restarts = 3,
}

/// splitmix64 finaliser
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn substream(master: u64, stage: Stage, index: u64) -> ChaCha8Rng {
    substream_tagged(master, stage as u64, index)
}

/// Like [`substream`] with a free-form tag, for stages that need several
/// independent families of streams (e.g. two screening programs).
pub fn substream_tagged(master: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(master ^ mix(tag)));
    rng.set_stream(index);
    rng
}
