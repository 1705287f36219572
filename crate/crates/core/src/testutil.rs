//! Seeded random fixtures for unit tests.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::scalar::Complex;
use crate::tensor::DenseTensor;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Tensor with entries uniform in the unit square centred at 0.
pub fn random_tensor(dims: &[usize], seed: u64) -> DenseTensor<f64> {
    let mut r = rng(seed);
    DenseTensor::from_fn(dims, |_| {
        Complex::new(r.gen::<f64>() - 0.5, r.gen::<f64>() - 0.5)
    })
}

/// Random Hermitian matrix as a rank-2 tensor.
pub fn random_hermitian(n: usize, seed: u64) -> DenseTensor<f64> {
    let a = random_tensor(&[n, n], seed);
    DenseTensor::from_fn(&[n, n], |i| {
        (a.get(&[i[0], i[1]]) + a.get(&[i[1], i[0]]).conj()) * 0.5
    })
}
