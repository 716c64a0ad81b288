//! Systems with known operators for recovery tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use ddrom_core::opinf::{build_data_matrix, continuous_problems, quadratic_len, RegressionProblem};
use ddrom_core::{DMatrix, DVector, RomForm, RomOperators};
use rand::Rng;

fn uniform(rng: &mut impl Rng, n: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0))
}

pub fn relative(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

/// Contractive linear part with a small quadratic perturbation.
pub fn operators(rng: &mut impl Rng, r: usize, form: RomForm) -> RomOperators {
    let q = uniform(rng, r, r).qr().q();
    let linear = match form {
        RomForm::Discrete => q * 0.8,
        RomForm::Continuous => (q - DMatrix::identity(r, r) * 2.0) * 0.5,
    };
    RomOperators {
        linear,
        quadratic: uniform(rng, r, quadratic_len(r)) * 0.05,
        coupling: BTreeMap::new(),
        constant: None,
        form,
    }
}

/// Many short rollouts of a discrete map from random initial states.
pub fn discrete_problem(ops: &RomOperators, rng: &mut impl Rng, rollouts: usize, len: usize) -> RegressionProblem {
    let r = ops.r();
    let mut heads = DMatrix::zeros(r, rollouts * len);
    let mut tails = DMatrix::zeros(r, rollouts * len);
    let mut scratch = Vec::new();
    for t in 0..rollouts {
        let mut q = DVector::from_fn(r, |_, _| rng.random_range(-0.5..0.5));
        for s in 0..len {
            let next = ops.interior(&q, &mut scratch);
            heads.set_column(t * len + s, &q);
            tails.set_column(t * len + s, &next);
            q = next;
        }
    }
    RegressionProblem {
        data: build_data_matrix(&heads, &[], false).unwrap(),
        rhs: tails.transpose(),
        r,
        neighbors: Vec::new(),
        constant: false,
        form: RomForm::Discrete,
    }
}

/// Random states paired with their exact right-hand sides.
pub fn continuous_problem(ops: &RomOperators, rng: &mut impl Rng, samples: usize) -> RegressionProblem {
    let r = ops.r();
    let q = uniform(rng, r, samples);
    let mut scratch = Vec::new();
    let mut dq = DMatrix::zeros(r, samples);
    for c in 0..samples {
        dq.set_column(c, &ops.interior(&q.column(c).into_owned(), &mut scratch));
    }
    continuous_problems(&[q], &[dq], &[vec![]], false).unwrap().remove(0)
}
