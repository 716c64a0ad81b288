//! Training pipeline: preprocess, decompose, project, infer.

use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;

use ddrom_core::decomp::{blending_weights, decompose_interval, decompose_sectors};
use ddrom_core::opinf::{
    coefficient_count, continuous_problems, discrete_problems, estimate_time_derivatives, solve_all,
    RegressionProblem,
};
use ddrom_core::pod::{pod_basis, rank_for_energy, singular_values};
use ddrom_core::preprocess::fit_preprocess;
use ddrom_core::regsearch::{default_t_reg_steps, search, RegGrid, RegResult, SearchInput};
use ddrom_core::snapshot::dof_rows;
use ddrom_core::{
    BlendingWeights, CoupledRom, Decomposition, Error, PodBasis, Regularization, RomForm, ScalingRecord, SnapshotSet,
};

use crate::config::{LambdaChoice, PipelineConfig, TopologyName};
use crate::memory::{largest_subdomain_bytes, matrix_bytes};

/// Everything up to (but excluding) the choice of regularization.
pub struct Prepared {
    pub scaled: SnapshotSet,
    pub scaling: ScalingRecord,
    pub decomposition: Decomposition,
    pub weights: BlendingWeights,
    pub n_train: usize,
    pub dt: f64,
}

pub struct Projected {
    pub bases: Vec<PodBasis>,
    /// Reduced training snapshots per subdomain.
    pub reduced: Vec<DMatrix<f64>>,
    pub problems: Vec<RegressionProblem>,
}

pub struct SubdomainReport {
    pub subdomain: usize,
    pub n_points: usize,
    pub r: usize,
    pub coefficients: usize,
    pub rows: usize,
    pub retained_energy: f64,
    pub residual: f64,
    pub lambda: Regularization,
}

pub struct Trained {
    pub rom: CoupledRom,
    pub reports: Vec<SubdomainReport>,
    pub search: Option<RegResult>,
    pub largest_subdomain_bytes: u64,
    pub full_bytes: u64,
}

pub fn build_decomposition(cfg: &PipelineConfig, set: &SnapshotSet) -> Result<(Decomposition, BlendingWeights)> {
    let geom = set.geometry();
    let d = &cfg.decomposition;
    let dec = match d.topology {
        TopologyName::Single => Decomposition::single(geom.n_points()),
        TopologyName::Interval if d.k == 1 => Decomposition::single(geom.n_points()),
        TopologyName::Interval => decompose_interval(geom, d.k, d.overlap).context("decomposing the interval")?,
        TopologyName::Annular => decompose_sectors(geom, d.k, d.overlap).context("decomposing into sectors")?,
    };
    let weights = blending_weights(&dec, geom).context("building blending weights")?;
    Ok((dec, weights))
}

pub fn prepare(cfg: &PipelineConfig, set: &SnapshotSet) -> Result<Prepared> {
    let n_train = cfg.preprocess.n_train.unwrap_or(set.time().n_train());
    if n_train == 0 || n_train > set.n_snapshots() {
        bail!("training count {n_train} outside 1..={}", set.n_snapshots());
    }
    let dt = set
        .time()
        .uniform_dt()
        .ok_or_else(|| anyhow::anyhow!("snapshots must be uniformly spaced in time"))?;
    let transforms = cfg.transforms(set.layout().n_vars())?;
    let (scaled, scaling) =
        fit_preprocess(set, &transforms, cfg.scaling_kind(), n_train).context("preprocessing snapshots")?;
    let (decomposition, weights) = build_decomposition(cfg, set)?;
    Ok(Prepared { scaled, scaling, decomposition, weights, n_train, dt })
}

/// Training-column snapshot block of subdomain `i`.
pub fn subdomain_training_block(prep: &Prepared, i: usize) -> DMatrix<f64> {
    let rows = dof_rows(prep.scaled.layout(), prep.decomposition.dofs(i));
    let data = prep.scaled.data();
    DMatrix::from_fn(rows.len(), prep.n_train, |a, c| data[(rows[a], c)])
}

/// Singular values of each subdomain's training block.
pub fn subdomain_spectra(prep: &Prepared) -> Result<Vec<Vec<f64>>> {
    (0..prep.decomposition.k())
        .map(|i| singular_values(&subdomain_training_block(prep, i)).with_context(|| format!("SVD of subdomain {i}")))
        .collect()
}

fn regression_rows(form: RomForm, n_train: usize) -> usize {
    match form {
        RomForm::Continuous => n_train,
        RomForm::Discrete => n_train - 1,
    }
}

pub fn project(cfg: &PipelineConfig, prep: &Prepared) -> Result<Projected> {
    let k = prep.decomposition.k();
    let mut bases = Vec::with_capacity(k);
    let mut reduced = Vec::with_capacity(k);
    for i in 0..k {
        let block = subdomain_training_block(prep, i);
        let r = match cfg.pod.r {
            Some(r) => r,
            None => {
                let sv = singular_values(&block)?;
                let r = rank_for_energy(&sv, cfg.pod.energy)?;
                cfg.pod.r_max.map_or(r, |m| r.min(m))
            }
        };
        let basis = pod_basis(&block, r, cfg.pod_algorithm())
            .with_context(|| format!("POD of subdomain {i}"))?
            .with_subdomain(i);
        reduced.push(basis.project(&block)?);
        bases.push(basis);
    }
    let form = cfg.form();
    let rows = regression_rows(form, prep.n_train);
    let adjacency = prep.decomposition.adjacency();
    for i in 0..k {
        let dims: Vec<usize> = adjacency[i].iter().map(|&j| bases[j].r()).collect();
        let coefficients = coefficient_count(bases[i].r(), &dims, true, cfg.opinf.constant);
        if coefficients > rows {
            return Err(Error::Budget { r: bases[i].r(), coefficients, rows })
                .with_context(|| format!("subdomain {i}: d(r) = {coefficients} exceeds n_train budget of {rows} rows"));
        }
    }
    let problems = match form {
        RomForm::Continuous => {
            let derivs = reduced
                .iter()
                .map(|q| estimate_time_derivatives(q, prep.dt, cfg.fd_scheme()))
                .collect::<ddrom_core::Result<Vec<_>>>()?;
            continuous_problems(&reduced, &derivs, &adjacency, cfg.opinf.constant)?
        }
        RomForm::Discrete => discrete_problems(&reduced, &adjacency, cfg.opinf.constant)?,
    };
    Ok(Projected { bases, reduced, problems })
}

pub fn regsearch(cfg: &PipelineConfig, prep: &Prepared, proj: &Projected, linear: Vec<f64>, quadratic: Vec<f64>) -> Result<RegResult> {
    let mut grid = RegGrid::new(
        linear,
        quadratic,
        cfg.search_mode(),
        cfg.regsearch.t_reg_steps.unwrap_or_else(|| default_t_reg_steps(prep.n_train)),
    );
    grid.bound_factor = cfg.regsearch.bound_factor;
    grid.max_subdomains = cfg.regsearch.max_subdomains;
    let input = SearchInput { problems: &proj.problems, reduced: &proj.reduced, dt: prep.dt };
    search(&input, &grid).context("regularization search")
}

pub fn train(cfg: &PipelineConfig, set: &SnapshotSet) -> Result<Trained> {
    let prep = prepare(cfg, set)?;
    let proj = project(cfg, &prep)?;
    let k = prep.decomposition.k();
    let (lambdas, result) = match cfg.opinf.lambda_choice()? {
        LambdaChoice::Fixed { linear, quadratic } => (vec![Regularization::new(linear, quadratic); k], None),
        LambdaChoice::Grid { linear, quadratic } => {
            let res = regsearch(cfg, &prep, &proj, linear, quadratic)?;
            if !res.bounded {
                log::warn!("no bounded regularization candidate; using the largest penalties");
            }
            (res.chosen.clone(), Some(res))
        }
    };
    let operators = solve_all(&proj.problems, &lambdas).context("operator inference")?;
    let reports = (0..k)
        .map(|i| {
            Ok(SubdomainReport {
                subdomain: i,
                n_points: prep.decomposition.dofs(i).len(),
                r: proj.bases[i].r(),
                coefficients: proj.problems[i].columns(),
                rows: proj.problems[i].rows(),
                retained_energy: proj.bases[i].retained_energy()?,
                residual: proj.problems[i].residual(&operators[i])?,
                lambda: lambdas[i],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let largest_subdomain_bytes = largest_subdomain_bytes(&prep.decomposition, set.layout().n_vars(), prep.n_train);
    let full_bytes = matrix_bytes(set.layout().state_dim() as u64, prep.n_train as u64);
    let rom = CoupledRom::new(
        set.layout().clone(),
        set.geometry().clone(),
        prep.decomposition,
        prep.weights,
        proj.bases,
        operators,
        prep.scaling,
        prep.dt,
        set.time().t_init(),
        prep.n_train,
    )?;
    Ok(Trained { rom, reports, search: result, largest_subdomain_bytes, full_bytes })
}
