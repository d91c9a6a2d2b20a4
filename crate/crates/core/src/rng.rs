//! Counter-based random streams.
//!
//! A master seed keys a ChaCha8 generator; every independent consumer gets its
//! own 64-bit stream id. Stream contents depend only on `(seed, id)`, never on
//! which worker thread pulls them or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random source handed to every sampling routine.
pub type Stream = ChaCha8Rng;

/// Purpose tag folded into the stream id so that the streams of one
/// realization never overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Geometry = 0,
    Channel = 1,
    Oracle = 2,
}

const PURPOSES: u64 = 4;

/// Returns the stream for item `index` of the given purpose.
pub fn substream(master_seed: u64, purpose: Purpose, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index.wrapping_mul(PURPOSES).wrapping_add(purpose as u64));
    rng
}
