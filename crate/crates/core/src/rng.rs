//! Counter-based random streams.
//!
//! Every random draw is addressed by `(seed, stream)`: the ChaCha8 key is
//! derived from the 64-bit seed and the stream index selects an
//! independent keystream, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
