//! Counter-based random streams.
//!
//! Every Monte Carlo loop is split into fixed-size chunks; chunk `c` of
//! stream `s` under master seed `m` always draws from the same ChaCha
//! keystream, so a run's output does not depend on how many threads
//! processed the chunks.

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub const DEFAULT_CHUNK_SIZE: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
    pub chunk_size: usize,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngSpec {
    pub fn new(seed: u64) -> Self {
        RngSpec {
            seed,
            stream: 0,
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        RngSpec { stream, ..self }
    }

    pub fn with_chunk_size(self, chunk_size: usize) -> Self {
        RngSpec {
            chunk_size: chunk_size.max(1),
            ..self
        }
    }

    /// A stream derived from this one, for sub-tasks that need their own
    /// independent randomness (e.g. one stream per table row).
    pub fn derive(self, tag: u64) -> Self {
        let mut s = self.stream ^ tag.rotate_left(32);
        let mixed = splitmix64(&mut s) ^ tag;
        RngSpec {
            stream: mixed,
            ..self
        }
    }

    fn key(&self) -> [u8; 32] {
        let mut state = self.seed ^ self.stream.wrapping_mul(0xd605_bbb5_8c8a_bdb3);
        let mut key = [0u8; 32];
        for block in key.chunks_exact_mut(8) {
            block.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        key
    }

    /// Generator for one chunk.
    pub fn chunk_rng(&self, chunk: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key());
        rng.set_stream(chunk);
        rng
    }

    pub fn n_chunks(&self, n_samples: usize) -> usize {
        n_samples.div_ceil(self.chunk_size.max(1))
    }

    /// Run `f` on every chunk of `0..n_samples` in parallel; results come
    /// back in chunk order.
    pub fn map_chunks<T, F>(&self, n_samples: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(Range<usize>, &mut ChaCha8Rng) -> T + Sync,
    {
        let cs = self.chunk_size.max(1);
        (0..self.n_chunks(n_samples))
            .into_par_iter()
            .map(|c| {
                let start = c * cs;
                let end = (start + cs).min(n_samples);
                let mut rng = self.chunk_rng(c as u64);
                f(start..end, &mut rng)
            })
            .collect()
    }
}
