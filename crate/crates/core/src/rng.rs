//! Reproducible, splittable random streams.
//!
//! A stream is a ChaCha12 keystream: the key is expanded from a 64-bit seed
//! and the 64-bit ChaCha stream id selects the substream, so
//! `RngStream::new(seed, k)` for distinct `k` are independent and the output
//! only depends on `(seed, k)`. [`RngStream::split`] derives a child stream
//! keyed by the parent's identity and a child index.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha12Rng,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut state = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut inner = ChaCha12Rng::from_seed(key);
        inner.set_stream(stream);
        RngStream {
            seed,
            stream,
            inner,
        }
    }

    /// Child stream; independent of the parent's consumed state.
    pub fn split(&self, child: u64) -> Self {
        let mut state = self.seed ^ 0xD1B5_4A32_D192_ED03;
        let a = splitmix64(&mut state);
        let mut state = a ^ self.stream.rotate_left(17);
        let derived = splitmix64(&mut state);
        RngStream::new(derived, child)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
}
