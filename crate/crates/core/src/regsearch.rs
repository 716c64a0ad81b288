//! Regularization grid search with a trajectory-boundedness filter.
//!
//! Every candidate is inferred, rolled out from the training initial state for
//! `t_reg_steps` steps and kept only if each reduced coordinate stays within
//! `bound_factor` times its largest training magnitude. Among the survivors
//! the one with the smallest squared Frobenius error over the training window
//! wins.

use std::ops::ControlFlow;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::opinf::{RegressionProblem, Regularization, RomOperators};
use crate::rom::integrate_operators;

pub const DEFAULT_BOUND_FACTOR: f64 = 1.2;
pub const DEFAULT_MAX_SUBDOMAINS: usize = 6;
/// Per-subdomain searches beyond this many combinations log a warning.
const LARGE_SEARCH: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// One pair shared by every subdomain.
    Global,
    /// Independent pairs for each subdomain, full product.
    PerSubdomain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegGrid {
    pub linear: Vec<f64>,
    pub quadratic: Vec<f64>,
    pub mode: SearchMode,
    /// Rollout length per candidate; at least the training length minus one.
    pub t_reg_steps: usize,
    pub bound_factor: f64,
    pub max_subdomains: usize,
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
        }
    }
}

/// Rollout length covering the training window plus 30%.
pub fn default_t_reg_steps(n_train: usize) -> usize {
    let steps = n_train.saturating_sub(1);
    steps + (3 * steps).div_ceil(10)
}

impl RegGrid {
    pub fn new(linear: Vec<f64>, quadratic: Vec<f64>, mode: SearchMode, t_reg_steps: usize) -> Self {
        Self {
            linear,
            quadratic,
            mode,
            t_reg_steps,
            bound_factor: DEFAULT_BOUND_FACTOR,
            max_subdomains: DEFAULT_MAX_SUBDOMAINS,
        }
    }

    /// 11 log-spaced values per axis between 1e-6 and 1e4.
    pub fn default_log(mode: SearchMode, t_reg_steps: usize) -> Self {
        Self::new(log_spaced(1e-6, 1e4, 11), log_spaced(1e-6, 1e4, 11), mode, t_reg_steps)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, list) in [("linear", &self.linear), ("quadratic", &self.quadratic)] {
            if list.is_empty() {
                return Err(Error::invalid(format!("empty {name} regularization grid")));
            }
            if list.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::invalid(format!("{name} candidates must be nonnegative and finite")));
            }
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!("{name} candidates must be strictly increasing")));
            }
        }
        if !(self.bound_factor >= 1.0 && self.bound_factor.is_finite()) {
            return Err(Error::invalid(format!("bound factor must be at least 1, got {}", self.bound_factor)));
        }
        Ok(())
    }

    /// Pairs in grid order: linear outer, quadratic inner.
    pub fn pairs(&self) -> Vec<Regularization> {
        self.linear
            .iter()
            .flat_map(|&l| self.quadratic.iter().map(move |&q| Regularization::new(l, q)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    /// One pair per subdomain (identical in global mode).
    pub lambdas: Vec<Regularization>,
    /// `Σ_i ‖Q̂_i − Q̃_i‖²_F` over the training window; infinite if the rollout broke down first.
    pub training_error: f64,
    pub bounded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegResult {
    pub chosen: Vec<Regularization>,
    pub training_error: f64,
    pub bounded: bool,
    pub trials: Vec<Trial>,
}

/// Training reduced snapshots and the matching regression problems.
#[derive(Debug, Clone, Copy)]
pub struct SearchInput<'a> {
    pub problems: &'a [RegressionProblem],
    /// Reduced training snapshots `r_i × n_train` per subdomain.
    pub reduced: &'a [DMatrix<f64>],
    /// Integration step for continuous-form candidates.
    pub dt: f64,
}

fn evaluate(
    ops: &[&RomOperators],
    input: &SearchInput<'_>,
    limits: &[Vec<f64>],
    init: &[DVector<f64>],
    steps: usize,
) -> (f64, bool) {
    let owned: Vec<RomOperators> = ops.iter().map(|o| (*o).clone()).collect();
    let mut bounded = true;
    let out = integrate_operators(&owned, input.dt, init, steps, |_, state| {
        let ok = state
            .iter()
            .zip(limits)
            .all(|(q, lim)| q.iter().zip(lim).all(|(v, l)| v.abs() <= *l));
        if ok {
            ControlFlow::Continue(())
        } else {
            bounded = false;
            ControlFlow::Break(())
        }
    });
    let traj = match out {
        Ok(t) => t,
        Err(_) => return (f64::INFINITY, false),
    };
    let n_train = input.reduced[0].ncols();
    if traj[0].ncols() < n_train {
        return (f64::INFINITY, false);
    }
    let err = traj
        .iter()
        .zip(input.reduced)
        .map(|(t, q)| (t.columns(0, n_train) - q).norm_squared())
        .sum();
    (err, bounded)
}

pub fn search(input: &SearchInput<'_>, grid: &RegGrid) -> Result<RegResult> {
    grid.validate()?;
    let k = input.problems.len();
    if k == 0 || input.reduced.len() != k {
        return Err(Error::dim(format!("{} problems but {} reduced snapshot sets", k, input.reduced.len())));
    }
    let n_train = input.reduced[0].ncols();
    if n_train == 0 || input.reduced.iter().any(|q| q.ncols() != n_train) {
        return Err(Error::dim("reduced training sets must share a nonzero snapshot count"));
    }
    if grid.t_reg_steps + 1 < n_train {
        return Err(Error::invalid(format!(
            "t_reg_steps = {} is shorter than the training window of {n_train} snapshots",
            grid.t_reg_steps
        )));
    }
    let pairs = grid.pairs();
    let p = pairs.len();
    let combos = match grid.mode {
        SearchMode::Global => p,
        SearchMode::PerSubdomain => {
            if k > grid.max_subdomains {
                return Err(Error::invalid(format!(
                    "per-subdomain search over {k} subdomains exceeds the cap of {}",
                    grid.max_subdomains
                )));
            }
            let n = u32::try_from(k).ok().and_then(|k| p.checked_pow(k)).ok_or_else(|| {
                Error::invalid(format!("per-subdomain search space {p}^{k} overflows"))
            })?;
            if n > LARGE_SEARCH {
                log::warn!("per-subdomain regularization search over {n} combinations");
            }
            n
        }
    };

    // Each subdomain's regression does not depend on its neighbors' penalties.
    let solved: Vec<Vec<RomOperators>> = input
        .problems
        .par_iter()
        .map(|prob| pairs.iter().map(|&reg| prob.solve(reg)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;

    let limits: Vec<Vec<f64>> = input
        .reduced
        .iter()
        .map(|q| q.row_iter().map(|row| grid.bound_factor * row.amax()).collect())
        .collect();
    let init: Vec<DVector<f64>> = input.reduced.iter().map(|q| q.column(0).into_owned()).collect();

    let choice = |c: usize| -> Vec<usize> {
        match grid.mode {
            SearchMode::Global => vec![c; k],
            SearchMode::PerSubdomain => {
                let mut idx = vec![0; k];
                let mut rest = c;
                for slot in idx.iter_mut().rev() {
                    *slot = rest % p;
                    rest /= p;
                }
                idx
            }
        }
    };

    let trials: Vec<Trial> = (0..combos)
        .into_par_iter()
        .map(|c| {
            let idx = choice(c);
            let ops: Vec<&RomOperators> = idx.iter().enumerate().map(|(i, &j)| &solved[i][j]).collect();
            let (training_error, bounded) = evaluate(&ops, input, &limits, &init, grid.t_reg_steps);
            Trial { lambdas: idx.iter().map(|&j| pairs[j]).collect(), training_error, bounded }
        })
        .collect();

    let best = trials
        .iter()
        .enumerate()
        .filter(|(_, t)| t.bounded)
        .fold(None::<(usize, f64)>, |acc, (i, t)| match acc {
            Some((_, e)) if e <= t.training_error => acc,
            _ => Some((i, t.training_error)),
        })
        .map(|(i, _)| i);
    let pick = best.unwrap_or(trials.len() - 1);
    let chosen = &trials[pick];
    Ok(RegResult {
        chosen: chosen.lambdas.clone(),
        training_error: chosen.training_error,
        bounded: chosen.bounded,
        trials,
    })
}
