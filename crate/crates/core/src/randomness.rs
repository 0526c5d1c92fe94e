//! Seedable Gaussian streams.
//!
//! Every Monte Carlo trial gets its own [`GaussianStream`] keyed by
//! `(seed, stream_id)`. The generator is ChaCha8, whose 64-bit stream
//! parameter selects an independent key stream, so trial `k` can be
//! reconstructed without generating trials `0..k`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Identifier of the normal sampler, written into every result header.
pub const NORMAL_METHOD: &str = "chacha8+ziggurat";

#[derive(Clone, Debug)]
pub struct GaussianStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
    counter: u64,
}

impl GaussianStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
            counter: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of draws taken so far (real, complex and uniform draws each count once).
    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// A standard normal variate.
    pub fn real(&mut self) -> f64 {
        self.counter += 1;
        StandardNormal.sample(&mut self.rng)
    }

    /// A standard complex Gaussian: independent real and imaginary parts,
    /// each `N(0, 1/2)`, so that `E|ζ|² = 1` with density `e^{-|ζ|²}/π`.
    pub fn complex(&mut self) -> Complex64 {
        self.counter += 1;
        let re: f64 = StandardNormal.sample(&mut self.rng);
        let im: f64 = StandardNormal.sample(&mut self.rng);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.counter += 1;
        self.rng.random::<f64>()
    }

    /// Uniform on `(0, 1]`, safe to pass to `ln`.
    pub fn uniform_open0(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    /// Fair coin.
    pub fn coin(&mut self) -> bool {
        self.counter += 1;
        self.rng.random::<bool>()
    }

    /// A uniformly distributed unit vector in the plane, as a complex number.
    pub fn unit_phase(&mut self) -> Complex64 {
        let t = std::f64::consts::TAU * self.uniform();
        Complex64::from_polar(1.0, t)
    }
}

/// Derive a stream-family seed from a run seed and an experiment-local tag,
/// so that unrelated sub-experiments of one run never share key streams.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
