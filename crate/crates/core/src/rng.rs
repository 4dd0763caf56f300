//! Deterministic random streams.
//!
//! Every sampler in the crate draws from an [`RngStream`] handed to it. A
//! stream is identified by `(seed, stream_id)` and backed by ChaCha12 with
//! the stream id mapped onto the cipher's native 64-bit stream selector, so
//! identical identifiers reproduce identical draws on every platform.
//! Child streams for replicates and jump chunks are derived with
//! [`RngStream::substream`], which makes parallel results independent of
//! thread scheduling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Derives the `index`-th child stream.
    ///
    /// Only the identifiers of `self` are used, never its current position,
    /// so a child is the same no matter how much the parent has been drawn.
    pub fn substream(&self, index: u64) -> RngStream {
        let child_seed = mix64(self.seed ^ mix64(self.stream_id.wrapping_add(0xA076_1D64_78BD_642F)));
        RngStream::new(child_seed, index)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Well-known child stream indices.
pub mod streams {
    pub const LARGE_JUMP: u64 = 1;
    pub const SMALL_JUMP: u64 = 2;
    pub const JUMP_COUNT: u64 = 0;
    pub const JUMP_CHUNKS: u64 = 1;
}


/// Runs `f` once per replicate on its own child stream, in parallel, and
/// returns the results ordered by replicate index.
pub fn replicates<T, F>(stream: &RngStream, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut RngStream) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n as u64)
        .into_par_iter()
        .map(|k| f(&mut stream.substream(k)))
        .collect()
}
