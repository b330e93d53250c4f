//! Special functions and deterministic random sampling.
//!
//! Everything here is pure: identical inputs give identical outputs, and
//! [`RngStream`] gives identical sample sequences for identical
//! `(seed, stream_id)` pairs regardless of how work is scheduled.

mod beta;
mod normal;
mod sampling;

pub use beta::{beta_quantile, ln_gamma, reg_inc_beta};
pub use normal::{std_normal_cdf, std_normal_pdf, std_normal_quantile};
pub use sampling::sample_gaussian_vector;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A probability, guaranteed to lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::InvalidArgument(format!(
                "probability must lie in [0, 1], got {value}"
            )))
        }
    }

    /// The raw value.
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl std::fmt::Display for Probability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// A named, reproducible random stream.
///
/// Backed by ChaCha12, which supports 2^64 independent streams per seed.
/// The same `(seed, stream_id)` always produces the same sequence, no matter
/// how many workers are running or in what order streams are consumed, so
/// Monte Carlo harnesses stay reproducible when parallelized by handing each
/// logical task its own stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Instantiate the generator for this stream.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Derive a child stream. Not cryptographic; just deterministic domain
    /// separation so nested loops can hand out disjoint streams.
    pub fn substream(&self, index: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id: splitmix64(
                self.stream_id
                    .wrapping_mul(0x9e37_79b9_7f4a_7c15)
                    .wrapping_add(index)
                    .wrapping_add(1),
            ),
        }
    }
}

/// SplitMix64 finalizer, used only to spread substream ids.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
