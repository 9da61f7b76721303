//! Reproducible random streams addressed by `(seed, stream_id)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// A ChaCha8 generator keyed by `seed` and positioned on stream `stream_id`.
///
/// Streams with different ids never overlap; the same `(seed, stream_id)`
/// always yields the same draws.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self { seed, stream_id, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Standard normal draw.
    #[inline]
    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform draw on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }
}

/// Stream id of path `index` in ensemble `tag`; tags keep ensembles of one
/// experiment disjoint.
#[inline]
pub fn stream_of(tag: u32, index: u64) -> u64 {
    ((tag as u64) << 40) | (index & ((1 << 40) - 1))
}
