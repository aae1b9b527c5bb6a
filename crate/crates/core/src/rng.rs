//! Reproducible random streams.
//!
//! Stream `i` of seed `s` is a ChaCha8 generator whose 256-bit key holds `s`
//! (little endian) in its first eight bytes followed by a fixed tag, and whose
//! 64-bit stream id is `i`. The map `(s, i) -> (key, stream id)` is injective.
//! Replications are cut into fixed blocks of [`BLOCK_SIZE`]; block `b` always
//! runs on stream `b`, so estimates do not depend on the worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;

pub type Stream = ChaCha8Rng;

pub const BLOCK_SIZE: u64 = 1 << 14;

const KEY_TAG: &[u8; 24] = b"ruin-lab/stream-key/v1\0\0";

pub fn stream(seed: u64, index: u64) -> Stream {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..].copy_from_slice(KEY_TAG);
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Provenance of one block of replications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StreamTag {
    pub seed: u64,
    pub stream_index: u64,
    pub n_sub: u64,
}

/// Fixed block plan for `n` replications under `seed`, starting at stream `first`.
pub fn block_plan(seed: u64, first: u64, n: u64) -> Vec<StreamTag> {
    let blocks = n.div_ceil(BLOCK_SIZE);
    (0..blocks)
        .map(|b| StreamTag {
            seed,
            stream_index: first + b,
            n_sub: (n - b * BLOCK_SIZE).min(BLOCK_SIZE),
        })
        .collect()
}

/// Run `work` on every block of the plan in parallel and return the partials in
/// plan order.
pub(crate) fn run_blocks<T, F>(plan: &[StreamTag], work: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&StreamTag, &mut Stream) -> Result<T> + Sync,
{
    plan.par_iter()
        .map(|tag| {
            let mut rng = stream(tag.seed, tag.stream_index);
            work(tag, &mut rng)
        })
        .collect()
}

/// Uniform draw on (0, 1].
#[inline]
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Standard exponential draw.
#[inline]
pub fn std_exp<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    -open_unit(rng).ln()
}
