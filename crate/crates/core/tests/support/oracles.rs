//! Reference implementations written with plain loops over `Vec<f64>`.
#![allow(dead_code)]

/// Dense row-major matrix.
pub type Rows = Vec<Vec<f64>>;

pub fn from_fn(n: usize, m: usize, f: impl Fn(usize, usize) -> f64) -> Rows {
    (0..n).map(|i| (0..m).map(|j| f(i, j)).collect()).collect()
}

/// Solves `a x = b` for every column of `b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Rows, mut b: Rows) -> Rows {
    let n = a.len();
    let m = b[0].len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col];
        assert!(p != 0.0, "singular system");
        for row in col + 1..n {
            let f = a[row][col] / p;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            for c in 0..m {
                b[row][c] -= f * b[col][c];
            }
        }
    }
    let mut x = vec![vec![0.0; m]; n];
    for row in (0..n).rev() {
        for c in 0..m {
            let mut s = b[row][c];
            for k in row + 1..n {
                s -= a[row][k] * x[k][c];
            }
            x[row][c] = s / a[row][row];
        }
    }
    x
}

/// Minimizer of `‖D X − R‖² + Σ_j λ_j ‖X_j,:‖²` through the normal equations.
pub fn ridge_normal_equations(d: &Rows, rhs: &Rows, lambdas: &[f64]) -> Rows {
    let (m, n) = (d.len(), d[0].len());
    let k = rhs[0].len();
    let mut g = vec![vec![0.0; n]; n];
    let mut b = vec![vec![0.0; k]; n];
    for row in 0..m {
        for i in 0..n {
            for j in 0..n {
                g[i][j] += d[row][i] * d[row][j];
            }
            for c in 0..k {
                b[i][c] += d[row][i] * rhs[row][c];
            }
        }
    }
    for i in 0..n {
        g[i][i] += lambdas[i];
    }
    gauss_solve(g, b)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn jacobi_eigenvalues(mut a: Rows) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(f64::MIN_POSITIVE);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// `MᵀM` for a row-major `M`.
pub fn gram(m: &Rows) -> Rows {
    let n = m[0].len();
    let mut g = vec![vec![0.0; n]; n];
    for row in m {
        for i in 0..n {
            for j in 0..n {
                g[i][j] += row[i] * row[j];
            }
        }
    }
    g
}

/// `Σ (a − b)² / Σ a²` by a double loop.
pub fn relative_error_loop(a: &Rows, b: &Rows) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..a.len() {
        for j in 0..a[i].len() {
            num += (a[i][j] - b[i][j]).powi(2);
            den += a[i][j].powi(2);
        }
    }
    num / den
}

/// Exact solution of `q' = Λ q` for diagonal `Λ`.
pub fn exp_diag(lambda: &[f64], q0: &[f64], t: f64) -> Vec<f64> {
    lambda.iter().zip(q0).map(|(l, q)| (l * t).exp() * q).collect()
}
