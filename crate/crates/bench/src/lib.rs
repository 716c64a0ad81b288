//! Seeded fixtures shared by the benchmarks.

use std::collections::BTreeMap;

use ddrom_core::opinf::quadratic_len;
use ddrom_core::{DMatrix, DVector, RomForm, RomOperators};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_matrix(seed: u64, n: usize, m: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0))
}

/// `k` contractive discrete-map subdomains of dimension `r` on a ring, each
/// coupled to its two neighbors.
pub fn ring_operators(seed: u64, k: usize, r: usize) -> (Vec<RomOperators>, Vec<DVector<f64>>) {
    let ops = (0..k)
        .map(|i| {
            let s = seed + i as u64;
            let mut coupling = BTreeMap::new();
            if k > 1 {
                for j in [(i + 1) % k, (i + k - 1) % k] {
                    coupling.insert(j, random_matrix(s + 100, r, r) * 0.01);
                }
            }
            RomOperators {
                linear: random_matrix(s, r, r).qr().q() * 0.9,
                quadratic: random_matrix(s + 200, r, quadratic_len(r)) * 0.01,
                coupling,
                constant: None,
                form: RomForm::Discrete,
            }
        })
        .collect();
    let init = (0..k).map(|i| random_matrix(seed + 300 + i as u64, r, 1).column(0) * 0.1).collect();
    (ops, init)
}
