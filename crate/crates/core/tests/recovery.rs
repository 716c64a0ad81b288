mod support;

use std::ops::ControlFlow;

use ddrom_core::fomlab::{galerkin_operators, rhs_burgers, simulate, FomKind, FomSpec};
use ddrom_core::opinf::{continuous_problems, solve_all};
use ddrom_core::pod::{pod_basis, PodAlgorithm};
use ddrom_core::rom::{integrate_operators, integrate_single};
use ddrom_core::{DMatrix, DVector, Regularization, RomForm};
use support::oracles::exp_diag;
use support::planted::{continuous_problem, discrete_problem, operators, relative};
use support::rng;

#[test]
fn discrete_map_is_recovered() {
    for seed in 0..5 {
        let mut g = rng(seed);
        let truth = operators(&mut g, 6, RomForm::Discrete);
        let problem = discrete_problem(&truth, &mut g, 30, 4);
        let got = problem.solve(Regularization::NONE).unwrap();
        assert!(relative(&got.linear, &truth.linear) <= 1e-8);
        assert!(relative(&got.quadratic, &truth.quadratic) <= 1e-8);
    }
}

#[test]
fn continuous_operators_are_recovered() {
    for seed in 10..15 {
        let mut g = rng(seed);
        let truth = operators(&mut g, 6, RomForm::Continuous);
        let got = continuous_problem(&truth, &mut g, 120).solve(Regularization::NONE).unwrap();
        assert!(relative(&got.linear, &truth.linear) <= 1e-6);
        assert!(relative(&got.quadratic, &truth.quadratic) <= 1e-6);
    }
}

#[test]
fn ridge_norm_shrinks_along_a_ladder() {
    let mut g = rng(7);
    let truth = operators(&mut g, 4, RomForm::Continuous);
    let problem = continuous_problem(&truth, &mut g, 60);
    let mut last = f64::INFINITY;
    for lam in [0.0, 1e-6, 1e-4, 1e-2, 1.0, 1e2] {
        let ops = problem.solve(Regularization::new(lam, lam)).unwrap();
        let norm = (ops.linear.norm_squared() + ops.quadratic.norm_squared()).sqrt();
        assert!(norm <= last * (1.0 + 1e-12), "{lam}: {norm} > {last}");
        last = norm;
    }
}

#[test]
fn subdomain_order_does_not_matter() {
    let mut g = rng(21);
    let problems: Vec<_> = (0..4)
        .map(|_| {
            let truth = operators(&mut g, 3, RomForm::Continuous);
            continuous_problem(&truth, &mut g, 40)
        })
        .collect();
    let lam = [Regularization::new(1e-3, 1e-2)];
    let forward = solve_all(&problems, &lam).unwrap();
    let reversed: Vec<_> = problems.iter().rev().cloned().collect();
    let mut backward = solve_all(&reversed, &lam).unwrap();
    backward.reverse();
    assert_eq!(forward, backward);
}

fn burgers() -> FomSpec {
    let mut spec = FomSpec::new(FomKind::Burgers { nu: 0.01, amplitude: 0.5, offset: 1.0, mode: 1 }, 256, 1.0, 2e-4, 2000);
    spec.stride = 10;
    spec
}

#[test]
fn regression_residual_never_exceeds_galerkin() {
    let spec = burgers();
    let set = simulate(&spec).unwrap();
    let x = set.data();
    let basis = pod_basis(x, 10, PodAlgorithm::ThinSvd).unwrap();
    let q = basis.project(x).unwrap();
    let mut f = DMatrix::zeros(x.nrows(), x.ncols());
    for c in 0..x.ncols() {
        let col: Vec<f64> = x.column(c).iter().copied().collect();
        f.set_column(c, &DVector::from_vec(rhs_burgers(&spec, &col).unwrap()));
    }
    let dq = basis.project(&f).unwrap();
    let problem = continuous_problems(&[q], &[dq], &[vec![]], false).unwrap().remove(0);
    let opinf = problem.residual(&problem.solve(Regularization::NONE).unwrap()).unwrap();
    let galerkin = problem.residual(&galerkin_operators(&spec, &basis).unwrap()).unwrap();
    assert!(galerkin - opinf >= 0.0, "opinf {opinf} galerkin {galerkin}");
}

fn linear_decay(rates: &[f64]) -> ddrom_core::RomOperators {
    let r = rates.len();
    let mut ops = ddrom_core::RomOperators::zeros(r, &[], RomForm::Continuous);
    ops.linear = DMatrix::from_diagonal(&DVector::from_column_slice(rates));
    ops
}

#[test]
fn rk4_is_fourth_order() {
    let rates = [-1.0, -2.5, -4.0];
    let ops = linear_decay(&rates);
    let q0 = DVector::from_column_slice(&[1.0, -0.5, 0.25]);
    let error = |steps: usize| {
        let traj = integrate_single(&ops, &q0, steps, 1.0 / steps as f64).unwrap();
        let exact = exp_diag(&rates, q0.as_slice(), 1.0);
        traj.column(steps).iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    for n in [10, 20, 40] {
        assert!(error(n) / error(2 * n) >= 14.0);
    }
}

#[test]
fn coupling_off_matches_independent_runs() {
    let mut g = rng(4);
    for form in [RomForm::Continuous, RomForm::Discrete] {
        let mut ops: Vec<_> = (0..3).map(|_| operators(&mut g, 4, form)).collect();
        for (i, o) in ops.iter_mut().enumerate() {
            for j in [(i + 1) % 3, (i + 2) % 3] {
                o.coupling.insert(j, DMatrix::zeros(4, 4));
            }
        }
        let init: Vec<_> = (0..3).map(|i| DVector::from_fn(4, |a, _| 0.1 * (a + i) as f64 - 0.2)).collect();
        let coupled = integrate_operators(&ops, 0.01, &init, 200, |_, _| ControlFlow::Continue(())).unwrap();
        for i in 0..3 {
            let mut alone = ops[i].clone();
            alone.coupling.clear();
            let single = integrate_single(&alone, &init[i], 200, 0.01).unwrap();
            assert!((&coupled[i] - single).amax() <= 1e-12);
        }
    }
}
