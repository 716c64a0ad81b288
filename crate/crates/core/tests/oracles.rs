mod support;

use ddrom_core::metrics::squared_l2_relative_error;
use ddrom_core::opinf::solve_tikhonov;
use ddrom_core::pod::{pod_basis, thin_svd, PodAlgorithm};
use ddrom_core::{DMatrix, Geometry, SnapshotSet, StateLayout, TimeGrid};
use rand::Rng;
use support::oracles::{gauss_solve, gram, jacobi_eigenvalues, relative_error_loop, ridge_normal_equations};
use support::{from_rows, rng, to_rows, uniform, with_spectrum};

#[test]
fn jacobi_oracle_sanity() {
    let a = vec![vec![2.0, 1.0, 0.0], vec![1.0, 2.0, 0.0], vec![0.0, 0.0, 5.0]];
    let ev = jacobi_eigenvalues(a);
    for (x, y) in ev.iter().zip([5.0, 3.0, 1.0]) {
        assert!((x - y).abs() < 1e-14);
    }
    let x = gauss_solve(vec![vec![0.0, 2.0], vec![3.0, 1.0]], vec![vec![4.0], vec![5.0]]);
    assert!((x[0][0] - 1.0).abs() < 1e-15 && (x[1][0] - 2.0).abs() < 1e-15);
}

#[test]
fn singular_values_match_gram_eigenvalues() {
    let mut g = rng(11);
    for _ in 0..20 {
        let p = g.random_range(8..40);
        let q = g.random_range(2..8);
        let m = uniform(&mut g, p, q);
        let svd = thin_svd(&m).unwrap();
        let ev = jacobi_eigenvalues(gram(&to_rows(&m)));
        for (s, e) in svd.s.iter().zip(&ev) {
            assert!((s * s - e).abs() <= 1e-10 * ev[0], "{s} vs {e}");
        }
    }
}

#[test]
fn ridge_matches_normal_equations_with_mixed_blocks() {
    let mut g = rng(5);
    for _ in 0..50 {
        let n_cols = g.random_range(3..12);
        let rows = n_cols + g.random_range(0..30);
        let d = uniform(&mut g, rows, n_cols);
        let n_rhs = g.random_range(1..4);
        let rhs = uniform(&mut g, rows, n_rhs);
        let mut blocks = Vec::new();
        let mut left = n_cols;
        while left > 0 {
            let w = g.random_range(1..=left);
            let lam = if g.random_bool(0.2) { 0.0 } else { 10f64.powf(g.random_range(-6.0..1.0)) };
            blocks.push((w, lam));
            left -= w;
        }
        let diag: Vec<f64> = blocks.iter().flat_map(|&(w, l)| std::iter::repeat_n(l, w)).collect();
        let x = solve_tikhonov(&d, &rhs, &blocks).unwrap();
        let oracle = from_rows(&ridge_normal_equations(&to_rows(&d), &to_rows(&rhs), &diag));
        assert!((&x - &oracle).norm() <= 1e-8 * oracle.norm(), "blocks {blocks:?}");
    }
}

#[test]
fn snapshot_projector_agrees_with_svd() {
    let mut g = rng(9);
    let s: Vec<f64> = (0..12).map(|i| if i < 5 { 10.0 - i as f64 } else { 0.1 / (i as f64) }).collect();
    let m = with_spectrum(&mut g, 60, &s);
    let a = pod_basis(&m, 5, PodAlgorithm::ThinSvd).unwrap();
    let b = pod_basis(&m, 5, PodAlgorithm::MethodOfSnapshots { block: 4 }).unwrap();
    let pa = &a.basis * a.basis.transpose();
    let pb = &b.basis * b.basis.transpose();
    assert!((pa - pb).norm() <= 1e-8);
}

#[test]
fn relative_error_matches_double_loop() {
    let mut g = rng(3);
    let n_x = 17;
    let layout = StateLayout::new(vec!["a".into(), "b".into()], vec![String::new(); 2], n_x).unwrap();
    let geom = Geometry::uniform_interval(0.0, 1.0, n_x).unwrap();
    let time = TimeGrid::uniform(0.0, 1.0, 9, 9).unwrap();
    let x = SnapshotSet::new(layout.clone(), geom.clone(), time.clone(), uniform(&mut g, 2 * n_x, 9)).unwrap();
    let y = SnapshotSet::new(layout, geom, time, uniform(&mut g, 2 * n_x, 9)).unwrap();
    for v in 0..2 {
        let e = squared_l2_relative_error(&x, &y, v, 2..7).unwrap();
        let block = |s: &SnapshotSet| -> DMatrix<f64> { s.variable_block(v).columns(2, 5).into_owned() };
        let o = relative_error_loop(&to_rows(&block(&x)), &to_rows(&block(&y)));
        assert!((e - o).abs() <= 1e-12 * o);
    }
}
