//! POD bases via thin SVD or the method of snapshots.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative singular-value threshold below which a requested rank is refused.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Column block width used when accumulating the Gram matrix.
pub const DEFAULT_GRAM_BLOCK: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub w: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PodAlgorithm {
    ThinSvd,
    MethodOfSnapshots { block: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PodBasis {
    /// `n_i × r` with orthonormal columns.
    pub basis: DMatrix<f64>,
    /// Full spectrum, nonincreasing.
    pub singular_values: Vec<f64>,
    pub subdomain: usize,
}

fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(" in matrix passed to the SVD".into()));
    }
    Ok(())
}

/// Flips column signs so each column's largest-magnitude entry is positive,
/// applying the same flip to the paired column of `partner`.
fn fix_signs(u: &mut DMatrix<f64>, partner: Option<&mut DMatrix<f64>>) {
    let mut flips = Vec::with_capacity(u.ncols());
    for j in 0..u.ncols() {
        let col = u.column(j);
        let mut best = 0usize;
        for i in 1..col.len() {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        flips.push(!col.is_empty() && col[best] < 0.0);
    }
    for (j, &flip) in flips.iter().enumerate() {
        if flip {
            u.column_mut(j).neg_mut();
        }
    }
    if let Some(p) = partner {
        for (j, &flip) in flips.iter().enumerate() {
            if flip && j < p.ncols() {
                p.column_mut(j).neg_mut();
            }
        }
    }
}

/// Thin SVD of a tall matrix: `M = U diag(S) Wᵀ` with `U` `p × q`.
pub fn thin_svd(m: &DMatrix<f64>) -> Result<ThinSvd> {
    let (p, q) = m.shape();
    if p < q {
        return Err(Error::dim(format!("thin SVD needs a tall matrix, got {p} × {q}")));
    }
    if q == 0 {
        return Err(Error::dim("thin SVD of an empty matrix"));
    }
    check_finite(m)?;
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s: Vec<f64> = order.iter().map(|&j| svd.singular_values[j]).collect();
    let mut u_sorted = DMatrix::zeros(p, q);
    let mut w_sorted = DMatrix::zeros(q, q);
    for (dst, &src) in order.iter().enumerate() {
        u_sorted.set_column(dst, &u.column(src));
        w_sorted.set_column(dst, &v_t.row(src).transpose());
    }
    fix_signs(&mut u_sorted, Some(&mut w_sorted));
    Ok(ThinSvd { u: u_sorted, s, w: w_sorted })
}

/// `MᵀM`, accumulated over column blocks so that only two blocks of `M` are
/// touched at a time.
pub fn gram_matrix(m: &DMatrix<f64>, block: usize) -> DMatrix<f64> {
    let q = m.ncols();
    let block = block.max(1);
    let mut g = DMatrix::zeros(q, q);
    let starts: Vec<usize> = (0..q).step_by(block).collect();
    for &a in &starts {
        let wa = block.min(q - a);
        let ma = m.columns(a, wa);
        for &b in starts.iter().filter(|&&b| b >= a) {
            let wb = block.min(q - b);
            let gab = ma.tr_mul(&m.columns(b, wb));
            g.view_mut((a, b), (wa, wb)).copy_from(&gab);
            if b != a {
                g.view_mut((b, a), (wb, wa)).copy_from(&gab.transpose());
            }
        }
    }
    g
}

/// Sorted (descending) eigenpairs of a symmetric matrix.
fn sorted_eigen(g: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let q = g.nrows();
    let eig = SymmetricEigen::new(g);
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let mut vecs = DMatrix::zeros(q, q);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vecs)
}

/// Rank tolerance for spectra recovered from a Gram matrix: eigenvalue
/// roundoff of order `q ε σ₁²` hides singular values below `√(q ε) σ₁`.
pub fn gram_rank_tolerance(q: usize) -> f64 {
    RANK_TOLERANCE.max(10.0 * (q as f64 * f64::EPSILON).sqrt())
}

/// POD basis from the eigendecomposition of `MᵀM`.
pub fn method_of_snapshots(m: &DMatrix<f64>, r: usize, block: usize) -> Result<PodBasis> {
    let q = m.ncols();
    if r == 0 || r > q || r > m.nrows() {
        return Err(Error::invalid(format!("requested rank {r} for a {} × {q} matrix", m.nrows())));
    }
    check_finite(m)?;
    let (lambda, w) = sorted_eigen(gram_matrix(m, block));
    let sigma: Vec<f64> = lambda.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let tol = gram_rank_tolerance(q) * sigma[0];
    let rank = sigma.iter().take_while(|&&s| s > tol).count();
    if r > rank {
        return Err(Error::RankDeficient { requested: r, rank });
    }
    let mut basis = m * w.columns(0, r);
    for j in 0..r {
        basis.column_mut(j).unscale_mut(sigma[j]);
    }
    fix_signs(&mut basis, None);
    let mut singular_values = sigma;
    singular_values.resize(q, 0.0);
    Ok(PodBasis { basis, singular_values, subdomain: 0 })
}

/// POD basis of rank `r` for snapshot matrix `m` (any shape).
pub fn pod_basis(m: &DMatrix<f64>, r: usize, algorithm: PodAlgorithm) -> Result<PodBasis> {
    let (p, q) = m.shape();
    if r == 0 || r > p.min(q) {
        return Err(Error::invalid(format!("requested rank {r} for a {p} × {q} matrix")));
    }
    match algorithm {
        PodAlgorithm::MethodOfSnapshots { block } => method_of_snapshots(m, r, block),
        PodAlgorithm::ThinSvd => {
            let (values, u) = if p >= q {
                let svd = thin_svd(m)?;
                (svd.s, svd.u)
            } else {
                // Wide matrix: left singular vectors of M are the right ones of Mᵀ.
                let svd = thin_svd(&m.transpose())?;
                let mut u = svd.w;
                fix_signs(&mut u, None);
                let mut s = svd.s;
                s.resize(q, 0.0);
                (s, u)
            };
            let rank = values.iter().take_while(|&&s| s > RANK_TOLERANCE * values[0]).count();
            if r > rank {
                return Err(Error::RankDeficient { requested: r, rank });
            }
            Ok(PodBasis { basis: u.columns(0, r).into_owned(), singular_values: values, subdomain: 0 })
        }
    }
}

/// Full singular spectrum of `m`, nonincreasing, padded with zeros to `ncols`.
pub fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_finite(m)?;
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s.resize(m.ncols(), 0.0);
    Ok(s)
}

/// `Σ_{j≤r} σ_j² / Σ_j σ_j²`.
pub fn retained_energy(singular_values: &[f64], r: usize) -> Result<f64> {
    if r > singular_values.len() {
        return Err(Error::invalid(format!(
            "r = {r} exceeds the {} available singular values",
            singular_values.len()
        )));
    }
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    if !(total > 0.0) {
        return Err(Error::invalid("all-zero singular value spectrum"));
    }
    let kept: f64 = singular_values[..r].iter().map(|s| s * s).sum();
    Ok(kept / total)
}

/// Cumulative retained energy for every `r = 1..=len`.
pub fn cumulative_energy(singular_values: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    if !(total > 0.0) {
        return Err(Error::invalid("all-zero singular value spectrum"));
    }
    let mut acc = 0.0;
    Ok(singular_values
        .iter()
        .map(|s| {
            acc += s * s;
            acc / total
        })
        .collect())
}

/// Smallest `r` whose retained energy reaches `target`.
pub fn rank_for_energy(singular_values: &[f64], target: f64) -> Result<usize> {
    let cum = cumulative_energy(singular_values)?;
    Ok(cum.iter().position(|&e| e >= target).map_or(cum.len(), |p| p + 1))
}

impl PodBasis {
    pub fn r(&self) -> usize {
        self.basis.ncols()
    }

    pub fn n_rows(&self) -> usize {
        self.basis.nrows()
    }

    pub fn with_subdomain(mut self, subdomain: usize) -> Self {
        self.subdomain = subdomain;
        self
    }

    pub fn retained_energy(&self) -> Result<f64> {
        retained_energy(&self.singular_values, self.r())
    }

    /// `V_rᵀ M`.
    pub fn project(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if m.nrows() != self.n_rows() {
            return Err(Error::dim(format!(
                "cannot project {} rows onto a basis with {} rows",
                m.nrows(),
                self.n_rows()
            )));
        }
        Ok(self.basis.tr_mul(m))
    }

    pub fn project_vector(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.n_rows() {
            return Err(Error::dim(format!(
                "cannot project length {} onto a basis with {} rows",
                v.len(),
                self.n_rows()
            )));
        }
        Ok(self.basis.tr_mul(v))
    }

    /// `V_r R`.
    pub fn lift(&self, reduced: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if reduced.nrows() != self.r() {
            return Err(Error::dim(format!(
                "reduced matrix has {} rows, basis dimension is {}",
                reduced.nrows(),
                self.r()
            )));
        }
        Ok(&self.basis * reduced)
    }

    pub fn lift_vector(&self, reduced: &DVector<f64>) -> Result<DVector<f64>> {
        if reduced.len() != self.r() {
            return Err(Error::dim(format!(
                "reduced vector has length {}, basis dimension is {}",
                reduced.len(),
                self.r()
            )));
        }
        Ok(&self.basis * reduced)
    }
}
