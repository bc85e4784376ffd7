//! Seeded random inputs for randomized checks.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::symtensor::SymTensor;

pub type CheckRng = ChaCha8Rng;

pub fn rng(seed: u64) -> CheckRng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Coefficients uniform in `[-1, 1]`.
pub fn tensor<R: Rng>(rng: &mut R, dim: usize, rank: usize) -> SymTensor {
    SymTensor::from_fn(dim, rank, |_| rng.gen_range(-1.0..=1.0))
}

/// Kernels for grades `0..=degree`.
pub fn kernels<R: Rng>(rng: &mut R, dim: usize, degree: usize) -> Vec<SymTensor> {
    (0..=degree).map(|n| tensor(rng, dim, n)).collect()
}

/// Kernels populated only at `grade`.
pub fn single_grade<R: Rng>(rng: &mut R, dim: usize, degree: usize, grade: usize) -> Vec<SymTensor> {
    (0..=degree)
        .map(|n| {
            if n == grade {
                tensor(rng, dim, n)
            } else {
                SymTensor::zeros(dim, n)
            }
        })
        .collect()
}

pub fn vector<R: Rng>(rng: &mut R, dim: usize, half_width: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-half_width..=half_width)).collect()
}
