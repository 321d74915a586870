//! Counter-style random substreams.
//!
//! A substream is ChaCha8 keyed by `master_seed` (expanded with
//! `SeedableRng::seed_from_u64`) and positioned on ChaCha stream number
//! `stream_index`. Stream indices are `role << 40 | path_index`, so every
//! path of every estimator side owns a fixed, disjoint stream regardless of
//! evaluation order or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const PATH_BITS: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self { master_seed, stream_index }
    }

    /// Substream for path `path` of estimator role `role`.
    pub fn for_path(master_seed: u64, role: u32, path: u64) -> Self {
        debug_assert!(path < 1 << PATH_BITS);
        Self::new(master_seed, ((role as u64) << PATH_BITS) | path)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.master_seed);
        r.set_stream(self.stream_index);
        r
    }
}

#[inline]
pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform on the open interval (0, 1).
#[inline]
pub fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}
