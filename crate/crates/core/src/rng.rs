//! Seedable, platform-stable randomness.
//!
//! Every stream is a ChaCha8 generator (`rand_chacha::ChaCha8Rng`) keyed by
//! `seed_from_u64(seed)` and positioned on ChaCha stream `stream`. Uniform
//! floats use 53 random mantissa bits; normals use the ziggurat sampler of
//! `rand_distr::StandardNormal`. Output is identical across platforms for
//! the pinned crate versions in `Cargo.lock`.

use nalgebra::{DMatrix, Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.random::<u64>()
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Direction drawn uniformly from the unit sphere in `dim` dimensions.
    pub fn unit_vector(&mut self, dim: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| self.normal()).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-12 {
                return v.into_iter().map(|x| x / n).collect();
            }
        }
    }

    /// Rotation about a uniformly random axis (sign, in 2-D) by an angle
    /// drawn uniformly from `[0, max_angle]` radians.
    pub fn rotation(&mut self, dim: usize, max_angle: f64) -> DMatrix<f64> {
        match dim {
            2 => {
                let theta = self.uniform_range(-max_angle, max_angle);
                let (s, c) = theta.sin_cos();
                DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
            }
            3 => {
                let axis = self.unit_vector(3);
                let theta = self.uniform_range(0.0, max_angle);
                let axis = Unit::new_normalize(Vector3::new(axis[0], axis[1], axis[2]));
                let r = Rotation3::from_axis_angle(&axis, theta);
                DMatrix::from_iterator(3, 3, r.matrix().iter().copied())
            }
            _ => panic!("rotations are only drawn in 2 or 3 dimensions"),
        }
    }

    /// Fisher-Yates shuffle driven by this stream.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }
}

/// SplitMix64 finalizer, used to derive independent seeds from
/// `(suite_seed, index)` pairs.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
