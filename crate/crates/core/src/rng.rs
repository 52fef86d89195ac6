//! Reproducible random streams.
//!
//! Every experiment cell draws from a ChaCha8 stream keyed by `(seed, stream)`.
//! Streams with the same seed but different stream ids are independent, so a
//! run can draw its initial point and its noise from separate streams and
//! cells can execute on any thread without changing their output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
