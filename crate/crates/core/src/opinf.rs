//! Operator Inference: regression of linear, quadratic and coupling operators.
//!
//! For subdomain `i` the data matrix has one row per training instant `t`:
//!
//! ```text
//! [ q̂ᵢ(t) | compress(q̂ᵢ(t)) | q̂ⱼ(t) for j ∈ I(i), ascending | 1 (optional) ]
//! ```
//!
//! and the right-hand side row is the time derivative (continuous form) or the
//! next snapshot (discrete form). The solution stacks the transposed operators
//! in the same column order.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RomForm {
    Continuous,
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularization {
    /// Penalty on the linear interior block and every coupling block.
    pub linear: f64,
    /// Penalty on the compressed quadratic block.
    pub quadratic: f64,
}

impl Regularization {
    pub const NONE: Regularization = Regularization { linear: 0.0, quadratic: 0.0 };

    pub fn new(linear: f64, quadratic: f64) -> Self {
        Self { linear, quadratic }
    }

    fn validate(&self) -> Result<()> {
        for v in [self.linear, self.quadratic] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("regularization {v} must be nonnegative and finite")));
            }
        }
        Ok(())
    }
}

/// Reduced operators of one subdomain.
#[derive(Debug, Clone, PartialEq)]
pub struct RomOperators {
    /// `r × r`
    pub linear: DMatrix<f64>,
    /// `r × r(r+1)/2`, columns in [`compress_quadratic`] order.
    pub quadratic: DMatrix<f64>,
    /// Neighbor id to `r × r_j` coupling block.
    pub coupling: BTreeMap<usize, DMatrix<f64>>,
    pub constant: Option<DVector<f64>>,
    pub form: RomForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdScheme {
    Order2,
    Order4,
}

impl FdScheme {
    pub fn stencil_width(self) -> usize {
        match self {
            FdScheme::Order2 => 3,
            FdScheme::Order4 => 5,
        }
    }
}

pub fn quadratic_len(r: usize) -> usize {
    r * (r + 1) / 2
}

/// Unique products `v_a v_b`, `a <= b`, with `a` the outer index.
pub fn compress_quadratic(v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(quadratic_len(v.len()));
    compress_into(v, &mut out);
    out
}

pub(crate) fn compress_into(v: &[f64], out: &mut Vec<f64>) {
    for a in 0..v.len() {
        for b in a..v.len() {
            out.push(v[a] * v[b]);
        }
    }
}

/// Number of regression unknowns per row: `r + r(r+1)/2 + Σ r_j (+1)`.
pub fn coefficient_count(r: usize, neighbor_dims: &[usize], quadratic: bool, constant: bool) -> usize {
    r + if quadratic { quadratic_len(r) } else { 0 } + neighbor_dims.iter().sum::<usize>() + usize::from(constant)
}

/// How the neighbor dimensions enter [`max_reduced_dimension`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NeighborDims {
    /// Known, fixed neighbor dimensions.
    Fixed(Vec<usize>),
    /// This many neighbors, each with the same dimension as the subdomain itself.
    Symmetric(usize),
}

/// Largest `r` whose coefficient count does not exceed `n_train`; 0 if none fits.
pub fn max_reduced_dimension(n_train: usize, neighbors: &NeighborDims, include_quadratic: bool) -> usize {
    let count = |r: usize| -> usize {
        let coupling = match neighbors {
            NeighborDims::Fixed(dims) => dims.iter().sum(),
            NeighborDims::Symmetric(n) => n * r,
        };
        r + if include_quadratic { quadratic_len(r) } else { 0 } + coupling
    };
    let mut r = 0;
    while count(r + 1) <= n_train {
        r += 1;
    }
    r
}

/// One data row per column of `own`. `neighbors` must already be in ascending id order.
pub fn build_data_matrix(own: &DMatrix<f64>, neighbors: &[&DMatrix<f64>], constant: bool) -> Result<DMatrix<f64>> {
    let m = own.ncols();
    if let Some(bad) = neighbors.iter().find(|n| n.ncols() != m) {
        return Err(Error::dim(format!(
            "neighbor snapshots have {} columns, own snapshots {m}",
            bad.ncols()
        )));
    }
    let r = own.nrows();
    let dims: Vec<usize> = neighbors.iter().map(|n| n.nrows()).collect();
    let d = coefficient_count(r, &dims, true, constant);
    let mut data = DMatrix::zeros(m, d);
    let mut row = Vec::with_capacity(d);
    for t in 0..m {
        row.clear();
        let q = own.column(t);
        row.extend(q.iter());
        compress_into(q.as_slice(), &mut row);
        for n in neighbors {
            row.extend(n.column(t).iter());
        }
        if constant {
            row.push(1.0);
        }
        for (c, v) in row.iter().enumerate() {
            data[(t, c)] = *v;
        }
    }
    Ok(data)
}

/// Minimizer of `‖D X − RHS‖_F² + Σ_b λ_b ‖X_b‖_F²`, where block `b` is a run of
/// `width` consecutive rows of `X` (columns of `D`).
///
/// Solved through a QR factorization of the stacked system `[D; diag(√λ)]`;
/// if that factor is numerically singular the minimum-norm solution is taken
/// from an SVD of the same stacked matrix.
pub fn solve_tikhonov(d: &DMatrix<f64>, rhs: &DMatrix<f64>, blocks: &[(usize, f64)]) -> Result<DMatrix<f64>> {
    let (m, n) = d.shape();
    if m == 0 || n == 0 {
        return Err(Error::dim("empty regression system"));
    }
    if rhs.nrows() != m {
        return Err(Error::dim(format!("data matrix has {m} rows, right-hand side {}", rhs.nrows())));
    }
    let width: usize = blocks.iter().map(|b| b.0).sum();
    if width != n {
        return Err(Error::dim(format!("regularization blocks cover {width} of {n} columns")));
    }
    if d.iter().chain(rhs.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(" in regression data".into()));
    }
    if let Some(&(_, l)) = blocks.iter().find(|b| !(b.1 >= 0.0 && b.1.is_finite())) {
        return Err(Error::invalid(format!("regularization {l} must be nonnegative and finite")));
    }

    let mut aug = DMatrix::zeros(m + n, n);
    aug.rows_mut(0, m).copy_from(d);
    let mut col = 0;
    for &(w, lambda) in blocks {
        let s = lambda.sqrt();
        for c in col..col + w {
            aug[(m + c, c)] = s;
        }
        col += w;
    }
    let mut rhs_aug = DMatrix::zeros(m + n, rhs.ncols());
    rhs_aug.rows_mut(0, m).copy_from(rhs);

    let qr = aug.clone().qr();
    let r = qr.r();
    let diag_max = (0..n).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let diag_min = (0..n).map(|i| r[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    let tol = 10.0 * (m + n) as f64 * f64::EPSILON;
    if diag_max > 0.0 && diag_min > tol * diag_max {
        let mut qtb = rhs_aug.clone();
        qr.q_tr_mul(&mut qtb);
        if let Some(x) = r.solve_upper_triangular(&qtb.rows(0, n).into_owned()) {
            if x.iter().all(|v| v.is_finite()) {
                return Ok(x);
            }
        }
    }
    let svd = aug.svd(true, true);
    let smax = svd.singular_values.max();
    let eps = (m + n) as f64 * f64::EPSILON * smax;
    svd.solve(&rhs_aug, eps).map_err(|e| Error::invalid(format!("least-squares solve failed: {e}")))
}

/// Regression data for one subdomain, reusable across regularization values.
#[derive(Debug, Clone)]
pub struct RegressionProblem {
    pub data: DMatrix<f64>,
    pub rhs: DMatrix<f64>,
    pub r: usize,
    /// `(neighbor id, r_j)`, ascending by id.
    pub neighbors: Vec<(usize, usize)>,
    pub constant: bool,
    pub form: RomForm,
}

impl RegressionProblem {
    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn columns(&self) -> usize {
        self.data.ncols()
    }

    pub fn blocks(&self, reg: Regularization) -> Vec<(usize, f64)> {
        let coupling: usize = self.neighbors.iter().map(|n| n.1).sum();
        let mut b = vec![(self.r, reg.linear), (quadratic_len(self.r), reg.quadratic)];
        if coupling > 0 {
            b.push((coupling, reg.linear));
        }
        if self.constant {
            b.push((1, reg.linear));
        }
        b
    }

    pub fn solve(&self, reg: Regularization) -> Result<RomOperators> {
        reg.validate()?;
        let x = solve_tikhonov(&self.data, &self.rhs, &self.blocks(reg))?;
        Ok(self.unstack(&x))
    }

    fn unstack(&self, x: &DMatrix<f64>) -> RomOperators {
        let r = self.r;
        let s = quadratic_len(r);
        let linear = x.rows(0, r).transpose();
        let quadratic = x.rows(r, s).transpose();
        let mut off = r + s;
        let mut coupling = BTreeMap::new();
        for &(j, rj) in &self.neighbors {
            coupling.insert(j, x.rows(off, rj).transpose());
            off += rj;
        }
        let constant = self.constant.then(|| x.row(off).transpose());
        RomOperators { linear, quadratic, coupling, constant, form: self.form }
    }

    /// Inverse of the unstacking: the `d × r` coefficient matrix of `ops`.
    pub fn stack(&self, ops: &RomOperators) -> Result<DMatrix<f64>> {
        let r = self.r;
        let mut x = DMatrix::zeros(self.columns(), r);
        if ops.linear.shape() != (r, r) || ops.quadratic.shape() != (r, quadratic_len(r)) {
            return Err(Error::dim("operator shapes do not match the regression problem"));
        }
        x.rows_mut(0, r).copy_from(&ops.linear.transpose());
        x.rows_mut(r, quadratic_len(r)).copy_from(&ops.quadratic.transpose());
        let mut off = r + quadratic_len(r);
        for &(j, rj) in &self.neighbors {
            let block = ops
                .coupling
                .get(&j)
                .ok_or_else(|| Error::dim(format!("operators lack the coupling block for neighbor {j}")))?;
            if block.shape() != (r, rj) {
                return Err(Error::dim(format!("coupling block for neighbor {j} has the wrong shape")));
            }
            x.rows_mut(off, rj).copy_from(&block.transpose());
            off += rj;
        }
        if self.constant {
            let c = ops.constant.as_ref().ok_or_else(|| Error::dim("operators lack the constant term"))?;
            x.row_mut(off).copy_from(&c.transpose());
        }
        Ok(x)
    }

    /// `‖D X − RHS‖_F²` for the given operators.
    pub fn residual(&self, ops: &RomOperators) -> Result<f64> {
        let x = self.stack(ops)?;
        Ok((&self.data * x - &self.rhs).norm_squared())
    }
}

fn neighbor_inputs<'a>(
    reduced: &'a [DMatrix<f64>],
    adjacency: &[Vec<usize>],
    i: usize,
) -> Result<(Vec<&'a DMatrix<f64>>, Vec<(usize, usize)>)> {
    let mut ids = adjacency[i].clone();
    ids.sort_unstable();
    ids.dedup();
    let mut mats = Vec::with_capacity(ids.len());
    let mut dims = Vec::with_capacity(ids.len());
    for j in ids {
        if j >= reduced.len() || j == i {
            return Err(Error::invalid(format!("subdomain {i} has invalid neighbor {j}")));
        }
        mats.push(&reduced[j]);
        dims.push((j, reduced[j].nrows()));
    }
    Ok((mats, dims))
}

fn check_adjacency(k: usize, adjacency: &[Vec<usize>]) -> Result<()> {
    if adjacency.len() != k {
        return Err(Error::dim(format!("{} adjacency lists for {k} subdomains", adjacency.len())));
    }
    Ok(())
}

/// Continuous-form problems: rows from `reduced`, targets from `derivatives`.
pub fn continuous_problems(
    reduced: &[DMatrix<f64>],
    derivatives: &[DMatrix<f64>],
    adjacency: &[Vec<usize>],
    constant: bool,
) -> Result<Vec<RegressionProblem>> {
    check_adjacency(reduced.len(), adjacency)?;
    if derivatives.len() != reduced.len() {
        return Err(Error::dim("derivative count differs from subdomain count"));
    }
    (0..reduced.len())
        .map(|i| {
            let q = &reduced[i];
            if q.ncols() < 1 {
                return Err(Error::invalid("continuous regression needs at least one snapshot"));
            }
            if derivatives[i].shape() != q.shape() {
                return Err(Error::dim(format!(
                    "subdomain {i}: derivatives are {:?}, snapshots {:?}",
                    derivatives[i].shape(),
                    q.shape()
                )));
            }
            let (mats, dims) = neighbor_inputs(reduced, adjacency, i)?;
            Ok(RegressionProblem {
                data: build_data_matrix(q, &mats, constant)?,
                rhs: derivatives[i].transpose(),
                r: q.nrows(),
                neighbors: dims,
                constant,
                form: RomForm::Continuous,
            })
        })
        .collect()
}

/// Discrete-form problems: rows from columns `0..m-1`, targets from `1..m`.
pub fn discrete_problems(
    reduced: &[DMatrix<f64>],
    adjacency: &[Vec<usize>],
    constant: bool,
) -> Result<Vec<RegressionProblem>> {
    check_adjacency(reduced.len(), adjacency)?;
    let m = reduced.first().map_or(0, |q| q.ncols());
    if m < 2 {
        return Err(Error::invalid(format!("discrete regression needs at least 2 snapshots, got {m}")));
    }
    if reduced.iter().any(|q| q.ncols() != m) {
        return Err(Error::dim("subdomain snapshot counts differ"));
    }
    let heads: Vec<DMatrix<f64>> = reduced.iter().map(|q| q.columns(0, m - 1).into_owned()).collect();
    (0..reduced.len())
        .map(|i| {
            let (mats, dims) = neighbor_inputs(&heads, adjacency, i)?;
            Ok(RegressionProblem {
                data: build_data_matrix(&heads[i], &mats, constant)?,
                rhs: reduced[i].columns(1, m - 1).transpose(),
                r: reduced[i].nrows(),
                neighbors: dims,
                constant,
                form: RomForm::Discrete,
            })
        })
        .collect()
}

/// Solves every subdomain problem independently. `lambdas` has one entry per
/// subdomain, or a single entry shared by all.
pub fn solve_all(problems: &[RegressionProblem], lambdas: &[Regularization]) -> Result<Vec<RomOperators>> {
    if lambdas.len() != 1 && lambdas.len() != problems.len() {
        return Err(Error::dim(format!(
            "{} regularization pairs for {} subdomains",
            lambdas.len(),
            problems.len()
        )));
    }
    problems
        .par_iter()
        .enumerate()
        .map(|(i, p)| p.solve(lambdas[if lambdas.len() == 1 { 0 } else { i }]))
        .collect()
}

pub fn infer_continuous(
    reduced: &[DMatrix<f64>],
    derivatives: &[DMatrix<f64>],
    adjacency: &[Vec<usize>],
    lambdas: &[Regularization],
    constant: bool,
) -> Result<Vec<RomOperators>> {
    solve_all(&continuous_problems(reduced, derivatives, adjacency, constant)?, lambdas)
}

pub fn infer_discrete(
    reduced: &[DMatrix<f64>],
    adjacency: &[Vec<usize>],
    lambdas: &[Regularization],
    constant: bool,
) -> Result<Vec<RomOperators>> {
    solve_all(&discrete_problems(reduced, adjacency, constant)?, lambdas)
}

/// Finite-difference time derivatives of uniformly spaced columns: central in
/// the interior, one-sided of the same order at both ends.
pub fn estimate_time_derivatives(q: &DMatrix<f64>, dt: f64, scheme: FdScheme) -> Result<DMatrix<f64>> {
    let m = q.ncols();
    if m < scheme.stencil_width() {
        return Err(Error::invalid(format!(
            "{m} snapshots are too few for a {}-point stencil",
            scheme.stencil_width()
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("time step must be positive"));
    }
    let mut out = DMatrix::zeros(q.nrows(), m);
    let c = |k: usize| q.column(k);
    match scheme {
        FdScheme::Order2 => {
            let h = 2.0 * dt;
            out.set_column(0, &((c(0) * -3.0 + c(1) * 4.0 - c(2)) / h));
            for k in 1..m - 1 {
                out.set_column(k, &((c(k + 1) - c(k - 1)) / h));
            }
            out.set_column(m - 1, &((c(m - 1) * 3.0 - c(m - 2) * 4.0 + c(m - 3)) / h));
        }
        FdScheme::Order4 => {
            let h = 12.0 * dt;
            out.set_column(0, &((c(0) * -25.0 + c(1) * 48.0 - c(2) * 36.0 + c(3) * 16.0 - c(4) * 3.0) / h));
            out.set_column(1, &((c(0) * -3.0 - c(1) * 10.0 + c(2) * 18.0 - c(3) * 6.0 + c(4)) / h));
            for k in 2..m - 2 {
                out.set_column(k, &((c(k - 2) - c(k - 1) * 8.0 + c(k + 1) * 8.0 - c(k + 2)) / h));
            }
            let e = m - 1;
            out.set_column(e - 1, &((c(e) * 3.0 + c(e - 1) * 10.0 - c(e - 2) * 18.0 + c(e - 3) * 6.0 - c(e - 4)) / h));
            out.set_column(e, &((c(e) * 25.0 - c(e - 1) * 48.0 + c(e - 2) * 36.0 - c(e - 3) * 16.0 + c(e - 4) * 3.0) / h));
        }
    }
    Ok(out)
}

impl RomOperators {
    pub fn r(&self) -> usize {
        self.linear.nrows()
    }

    pub fn zeros(r: usize, neighbor_dims: &[(usize, usize)], form: RomForm) -> Self {
        Self {
            linear: DMatrix::zeros(r, r),
            quadratic: DMatrix::zeros(r, quadratic_len(r)),
            coupling: neighbor_dims.iter().map(|&(j, rj)| (j, DMatrix::zeros(r, rj))).collect(),
            constant: None,
            form,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.r();
        if self.linear.ncols() != r || self.quadratic.shape() != (r, quadratic_len(r)) {
            return Err(Error::dim(format!("operator shapes inconsistent with r = {r}")));
        }
        if self.coupling.values().any(|c| c.nrows() != r) {
            return Err(Error::dim("coupling block row count differs from r"));
        }
        if self.constant.as_ref().is_some_and(|c| c.len() != r) {
            return Err(Error::dim("constant term length differs from r"));
        }
        let all = self
            .linear
            .iter()
            .chain(self.quadratic.iter())
            .chain(self.coupling.values().flat_map(|c| c.iter()))
            .chain(self.constant.iter().flat_map(|c| c.iter()));
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(" in operators".into()));
        }
        Ok(())
    }

    /// Interior terms `A q + H compress(q) (+ c)`.
    pub fn interior(&self, q: &DVector<f64>, scratch: &mut Vec<f64>) -> DVector<f64> {
        scratch.clear();
        compress_into(q.as_slice(), scratch);
        let mut out = &self.linear * q;
        out.gemv(1.0, &self.quadratic, &DVector::from_column_slice(scratch), 1.0);
        if let Some(c) = &self.constant {
            out += c;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compress_small_vectors() {
        assert_eq!(compress_quadratic(&[2.0, 3.0]), vec![4.0, 6.0, 9.0]);
        assert_eq!(compress_quadratic(&[2.0, 3.0]).len(), quadratic_len(2));
        assert_eq!(compress_quadratic(&[0.0; 4]), vec![0.0; 10]);
        assert_eq!(compress_quadratic(&[1.0, 2.0, 3.0]), vec![1.0, 2.0, 3.0, 4.0, 6.0, 9.0]);
    }

    #[test]
    fn data_matrix_row_layout() {
        let own = DMatrix::from_column_slice(2, 1, &[2.0, 3.0]);
        let d = build_data_matrix(&own, &[], false).unwrap();
        assert_eq!(d.shape(), (1, 5));
        assert_eq!(d.row(0).iter().copied().collect::<Vec<_>>(), vec![2.0, 3.0, 4.0, 6.0, 9.0]);

        let nb = DMatrix::from_column_slice(1, 1, &[7.0]);
        let d = build_data_matrix(&own, &[&nb], true).unwrap();
        assert_eq!(d.row(0).iter().copied().collect::<Vec<_>>(), vec![2.0, 3.0, 4.0, 6.0, 9.0, 7.0, 1.0]);

        let wrong = DMatrix::zeros(1, 2);
        assert!(build_data_matrix(&own, &[&wrong], false).is_err());
    }

    #[test]
    fn coefficient_budgets() {
        assert_eq!(coefficient_count(24, &[24, 24], true, false), 372);
        assert_eq!(coefficient_count(24, &[], true, false), 324);
    }

    #[test]
    fn max_dimension_rule() {
        assert_eq!(max_reduced_dimension(375, &NeighborDims::Symmetric(2), true), 24);
        assert_eq!(max_reduced_dimension(375, &NeighborDims::Symmetric(0), true), 25);
        assert_eq!(max_reduced_dimension(3, &NeighborDims::Fixed(vec![]), true), 1);
        assert_eq!(max_reduced_dimension(1, &NeighborDims::Fixed(vec![]), true), 0);
        assert_eq!(max_reduced_dimension(10, &NeighborDims::Fixed(vec![3]), false), 7);
    }

    #[test]
    fn scalar_ridge() {
        let d = DMatrix::from_element(1, 1, 1.0);
        let rhs = DMatrix::from_element(1, 1, 2.0);
        let x = solve_tikhonov(&d, &rhs, &[(1, 1.0)]).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact_square_solve() {
        let d = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]);
        let x_true = DMatrix::from_row_slice(3, 2, &[1.0, -1.0, 2.0, 0.5, -3.0, 4.0]);
        let rhs = &d * &x_true;
        let x = solve_tikhonov(&d, &rhs, &[(3, 0.0)]).unwrap();
        assert!((x - x_true).amax() < 1e-10);
    }

    #[test]
    fn rank_deficient_gives_minimum_norm() {
        // two identical columns: the minimum-norm split is even
        let d = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let rhs = DMatrix::from_column_slice(3, 1, &[2.0, 4.0, 6.0]);
        let x = solve_tikhonov(&d, &rhs, &[(2, 0.0)]).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-12 && (x[(1, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn solver_input_validation() {
        let d = DMatrix::from_element(2, 2, 1.0);
        let rhs = DMatrix::from_element(2, 1, 1.0);
        assert!(solve_tikhonov(&d, &rhs, &[(1, 0.0)]).is_err());
        assert!(solve_tikhonov(&d, &rhs, &[(2, -1.0)]).is_err());
        let mut bad = d.clone();
        bad[(0, 0)] = f64::NAN;
        assert!(matches!(solve_tikhonov(&bad, &rhs, &[(2, 1.0)]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn zero_rhs_gives_zero_operators() {
        let q = DMatrix::from_fn(3, 20, |i, t| ((i + 1) as f64 * 0.3 * t as f64).sin());
        let dq = DMatrix::zeros(3, 20);
        let ops = infer_continuous(&[q], &[dq], &[vec![]], &[Regularization::new(1e-3, 1e-3)], false).unwrap();
        assert!(ops[0].linear.iter().all(|&v| v == 0.0));
        assert!(ops[0].quadratic.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn discrete_needs_two_snapshots() {
        let q = DMatrix::zeros(2, 1);
        assert!(infer_discrete(&[q], &[vec![]], &[Regularization::NONE], false).is_err());
    }

    #[test]
    fn polynomial_exactness_of_derivatives() {
        let dt = 0.1;
        let q = DMatrix::from_fn(2, 9, |i, k| {
            let t = k as f64 * dt;
            if i == 0 {
                1.5 + 2.0 * t
            } else {
                -0.5 + 0.25 * t + 3.0 * t * t
            }
        });
        for scheme in [FdScheme::Order2, FdScheme::Order4] {
            let d = estimate_time_derivatives(&q, dt, scheme).unwrap();
            for k in 0..9 {
                let t = k as f64 * dt;
                assert!((d[(0, k)] - 2.0).abs() < 1e-12, "{scheme:?}");
                assert!((d[(1, k)] - (0.25 + 6.0 * t)).abs() < 1e-11, "{scheme:?} {k}");
            }
        }
        assert!(estimate_time_derivatives(&q.columns(0, 4).into_owned(), dt, FdScheme::Order4).is_err());
        assert!(estimate_time_derivatives(&q.columns(0, 2).into_owned(), dt, FdScheme::Order2).is_err());
    }

    #[test]
    fn stack_unstack_round_trip() {
        let own = DMatrix::from_fn(2, 8, |i, t| (i as f64 + 1.0) * (t as f64 * 0.7).cos());
        let nb = DMatrix::from_fn(3, 8, |i, t| (i as f64 - 1.0) * (t as f64 * 0.3).sin());
        let probs = discrete_problems(&[own, nb], &[vec![1], vec![0]], true).unwrap();
        let ops = probs[0].solve(Regularization::new(0.1, 0.2)).unwrap();
        assert_eq!(ops.coupling[&1].shape(), (2, 3));
        assert!(ops.constant.is_some());
        let x = probs[0].stack(&ops).unwrap();
        let again = probs[0].unstack(&x);
        assert_eq!(again, ops);
    }
}
