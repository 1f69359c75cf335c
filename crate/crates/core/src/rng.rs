//! Seeded, platform-independent random streams.
//!
//! Every random draw in a trial comes from a [`Rng`] derived from the trial
//! seed plus a `(index, purpose)` pair. Streams are assigned up front, so the
//! draws a model sees never depend on the order in which models execute.

use rand::distr::{Distribution, Open01};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Additive constant of the splitmix64 sequence (2^64 / golden ratio).
pub const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The splitmix64 finalizer: a bijective 64-bit mixing function.
///
/// Constants are the ones published with splitmix64
/// (`0xBF58476D1CE4E5B9`, `0x94D049BB133111EB`, shifts 30/27/31).
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` under `master_seed`.
pub fn trial_seed(master_seed: u64, trial: u64) -> u64 {
    mix64(master_seed ^ mix64(trial.wrapping_add(1).wrapping_mul(SPLITMIX_GAMMA)))
}

/// What a stream is used for. Distinct purposes never share draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    EdgeDrop = 1,
    WeightInit = 2,
    Dropout = 3,
    SubsetSampling = 4,
    GraphGeneration = 5,
    FeatureNoise = 6,
    Split = 7,
    NoisyEdges = 8,
}

/// Model index reserved for the consensus model (and the plain baseline,
/// which shares its streams).
pub const CONSENSUS_INDEX: u64 = u64::MAX;

/// Deterministic random stream backed by ChaCha8.
#[derive(Clone, Debug)]
pub struct Rng {
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn seed_from(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent substream keyed by `(seed, index, purpose)`.
    pub fn substream(seed: u64, index: u64, purpose: Purpose) -> Self {
        let key = mix64(seed ^ mix64(index.wrapping_mul(SPLITMIX_GAMMA) ^ purpose as u64));
        let mut inner = ChaCha8Rng::seed_from_u64(key);
        inner.set_stream(purpose as u64);
        Self { inner }
    }

    /// Uniform draw from the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        Open01.sample(&mut self.inner)
    }

    /// Uniform draw from [lo, hi).
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform index in [0, n). `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        use rand::Rng as _;
        self.inner.random_range(0..n)
    }

    /// `amount` distinct indices from [0, len), uniformly, in ascending order.
    pub fn sample_indices(&mut self, len: usize, amount: usize) -> Vec<usize> {
        let mut picked = rand::seq::index::sample(&mut self.inner, len, amount).into_vec();
        picked.sort_unstable();
        picked
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        use rand::seq::SliceRandom;
        items.shuffle(&mut self.inner);
    }
}

impl RngCore for Rng {
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
