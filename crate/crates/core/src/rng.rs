//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by the
//! master seed. The 64-bit stream id is derived from `(replicate, purpose)`,
//! so replicate `k` sees the same numbers whether it runs first, last, or on
//! another thread.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for inside one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Purpose {
    Configuration = 1,
    Reference = 2,
    Auxiliary = 3,
    Oracle = 4,
}

/// Master seed plus the coordinates of one stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub master: u64,
    pub replicate: u64,
    pub purpose: Purpose,
}

impl StreamKey {
    pub fn new(master: u64, replicate: u64, purpose: Purpose) -> Self {
        Self { master, replicate, purpose }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(stream_id(self.replicate, self.purpose));
        rng
    }
}

// Replicate in the low 56 bits, purpose tag in the high byte.
fn stream_id(replicate: u64, purpose: Purpose) -> u64 {
    ((purpose as u64) << 56) | (replicate & 0x00ff_ffff_ffff_ffff)
}

/// Stream for replicate `k` of a run keyed by `master`.
pub fn stream(master: u64, replicate: u64, purpose: Purpose) -> ChaCha8Rng {
    StreamKey::new(master, replicate, purpose).rng()
}
