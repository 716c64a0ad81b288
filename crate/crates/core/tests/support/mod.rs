#![allow(dead_code)]

pub mod oracles;
pub mod planted;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut impl Rng, n: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0))
}

/// `n × m` matrix with orthonormal columns.
pub fn orthonormal(rng: &mut impl Rng, n: usize, m: usize) -> DMatrix<f64> {
    uniform(rng, n, m).qr().q()
}

/// `U diag(s) Wᵀ` with random orthonormal factors.
pub fn with_spectrum(rng: &mut impl Rng, n: usize, s: &[f64]) -> DMatrix<f64> {
    let q = s.len();
    let u = orthonormal(rng, n, q);
    let w = orthonormal(rng, q, q);
    u * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(s)) * w.transpose()
}

pub fn to_rows(m: &DMatrix<f64>) -> oracles::Rows {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn from_rows(r: &oracles::Rows) -> DMatrix<f64> {
    DMatrix::from_fn(r.len(), r[0].len(), |i, j| r[i][j])
}
