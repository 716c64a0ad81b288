//! The assembled (possibly domain-decomposed) ROM and its time integration.

pub mod artifact;

use std::ops::ControlFlow;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::decomp::{extend_by_zeros, recombine, BlendingWeights, Decomposition};
use crate::error::{Error, Result};
use crate::opinf::{RomForm, RomOperators};
use crate::pod::PodBasis;
use crate::preprocess::ScalingRecord;
use crate::snapshot::{dof_rows, Geometry, SnapshotSet, StateLayout, TimeGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledRom {
    pub layout: StateLayout,
    pub geometry: Geometry,
    pub decomposition: Decomposition,
    pub weights: BlendingWeights,
    pub bases: Vec<PodBasis>,
    pub operators: Vec<RomOperators>,
    pub scaling: ScalingRecord,
    pub form: RomForm,
    /// Step used for integration and output spacing.
    pub dt: f64,
    /// Time stamp of the first output column.
    pub t0: f64,
    /// Training snapshot count, carried onto predicted time grids.
    pub n_train: usize,
    rows: Vec<Vec<usize>>,
}

/// Quadratic-operator entries summed over subdomains above which the
/// right-hand side is evaluated on the thread pool.
const PARALLEL_RHS_WORK: usize = 1 << 14;

/// Reduced-space dynamics shared by the coupled and single-domain paths.
struct Dynamics<'a> {
    operators: &'a [RomOperators],
}

impl Dynamics<'_> {
    fn local(ops: &RomOperators, q: &DVector<f64>, states: &[DVector<f64>], scratch: &mut Vec<f64>) -> DVector<f64> {
        let mut out = ops.interior(q, scratch);
        for (&j, block) in &ops.coupling {
            out.gemv(1.0, block, &states[j], 1.0);
        }
        out
    }

    fn rhs(&self, states: &[DVector<f64>], scratch: &mut Vec<f64>) -> Vec<DVector<f64>> {
        let work: usize = self.operators.iter().map(|o| o.quadratic.len()).sum();
        if self.operators.len() > 1 && work >= PARALLEL_RHS_WORK {
            self.operators
                .par_iter()
                .zip(states)
                .map_init(Vec::new, |scratch, (ops, q)| Self::local(ops, q, states, scratch))
                .collect()
        } else {
            self.operators
                .iter()
                .zip(states)
                .map(|(ops, q)| Self::local(ops, q, states, scratch))
                .collect()
        }
    }

    fn step(&self, form: RomForm, dt: f64, q: &[DVector<f64>], scratch: &mut Vec<f64>) -> Vec<DVector<f64>> {
        match form {
            RomForm::Discrete => self.rhs(q, scratch),
            RomForm::Continuous => {
                let axpy = |a: &[DVector<f64>], b: &[DVector<f64>], s: f64| -> Vec<DVector<f64>> {
                    a.iter().zip(b).map(|(x, k)| x + k * s).collect()
                };
                let k1 = self.rhs(q, scratch);
                let k2 = self.rhs(&axpy(q, &k1, 0.5 * dt), scratch);
                let k3 = self.rhs(&axpy(q, &k2, 0.5 * dt), scratch);
                let k4 = self.rhs(&axpy(q, &k3, dt), scratch);
                (0..q.len())
                    .map(|i| &q[i] + (&k1[i] + &k2[i] * 2.0 + &k3[i] * 2.0 + &k4[i]) * (dt / 6.0))
                    .collect()
            }
        }
    }

    /// Advances `init` for up to `steps` steps, calling `observe(step, state)`
    /// after each; returns the trajectories actually computed.
    fn run(
        &self,
        form: RomForm,
        dt: f64,
        init: &[DVector<f64>],
        steps: usize,
        mut observe: impl FnMut(usize, &[DVector<f64>]) -> ControlFlow<()>,
    ) -> Result<Vec<DMatrix<f64>>> {
        let mut traj: Vec<DMatrix<f64>> = init.iter().map(|q| DMatrix::zeros(q.len(), steps + 1)).collect();
        for (t, q) in traj.iter_mut().zip(init) {
            t.set_column(0, q);
        }
        if init.iter().any(|q| q.iter().any(|v| !v.is_finite())) {
            return Err(Error::Diverged(0));
        }
        let mut scratch = Vec::new();
        let mut state = init.to_vec();
        for s in 1..=steps {
            state = self.step(form, dt, &state, &mut scratch);
            if state.iter().any(|q| q.iter().any(|v| !v.is_finite())) {
                return Err(Error::Diverged(s));
            }
            for (t, q) in traj.iter_mut().zip(&state) {
                t.set_column(s, q);
            }
            if observe(s, &state).is_break() {
                return Ok(traj.into_iter().map(|t| t.columns(0, s + 1).into_owned()).collect());
            }
        }
        Ok(traj)
    }
}

/// Integrates bare reduced operators (no bases or decomposition), calling
/// `observe(step, state)` after every step; a break ends the rollout early.
pub fn integrate_operators(
    operators: &[RomOperators],
    dt: f64,
    init: &[DVector<f64>],
    steps: usize,
    observe: impl FnMut(usize, &[DVector<f64>]) -> ControlFlow<()>,
) -> Result<Vec<DMatrix<f64>>> {
    if operators.is_empty() || init.len() != operators.len() {
        return Err(Error::dim(format!("{} initial states for {} operator sets", init.len(), operators.len())));
    }
    let form = operators[0].form;
    for (i, (ops, q)) in operators.iter().zip(init).enumerate() {
        ops.validate()?;
        if ops.form != form {
            return Err(Error::invalid("operator forms differ across subdomains"));
        }
        if q.len() != ops.r() {
            return Err(Error::dim(format!("subdomain {i}: state length {} but r = {}", q.len(), ops.r())));
        }
        for (&j, block) in &ops.coupling {
            if j >= operators.len() || block.ncols() != operators[j].r() {
                return Err(Error::dim(format!("subdomain {i}: coupling block for {j} does not fit")));
            }
        }
    }
    Dynamics { operators }.run(form, dt, init, steps, observe)
}

/// Dedicated single-subdomain integration, no decomposition involved.
pub fn integrate_single(
    operators: &RomOperators,
    init: &DVector<f64>,
    steps: usize,
    dt: f64,
) -> Result<DMatrix<f64>> {
    let mut out = integrate_operators(std::slice::from_ref(operators), dt, std::slice::from_ref(init), steps, |_, _| {
        ControlFlow::Continue(())
    })?;
    Ok(out.remove(0))
}

impl CoupledRom {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        layout: StateLayout,
        geometry: Geometry,
        decomposition: Decomposition,
        weights: BlendingWeights,
        bases: Vec<PodBasis>,
        operators: Vec<RomOperators>,
        scaling: ScalingRecord,
        dt: f64,
        t0: f64,
        n_train: usize,
    ) -> Result<Self> {
        let k = decomposition.k();
        if bases.len() != k || operators.len() != k || weights.k() != k {
            return Err(Error::dim(format!(
                "{k} subdomains but {} bases, {} operator sets, {} weight vectors",
                bases.len(),
                operators.len(),
                weights.k()
            )));
        }
        if geometry.n_points() != layout.n_points() || decomposition.n_points() != layout.n_points() {
            return Err(Error::dim("geometry, decomposition and layout disagree on the point count"));
        }
        if weights.n_points() != layout.n_points() {
            return Err(Error::dim("blending weights have the wrong length"));
        }
        if scaling.state_dim() != layout.state_dim() || scaling.n_vars() != layout.n_vars() {
            return Err(Error::dim("scaling record does not match the state layout"));
        }
        let form = operators[0].form;
        if operators.iter().any(|o| o.form != form) {
            return Err(Error::invalid("operator forms differ across subdomains"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("time step must be positive"));
        }
        let mut rows = Vec::with_capacity(k);
        for i in 0..k {
            let r = dof_rows(&layout, decomposition.dofs(i));
            if bases[i].n_rows() != r.len() {
                return Err(Error::dim(format!(
                    "subdomain {i}: basis has {} rows, subdomain state has {}",
                    bases[i].n_rows(),
                    r.len()
                )));
            }
            let ops = &operators[i];
            ops.validate()?;
            if ops.r() != bases[i].r() {
                return Err(Error::dim(format!(
                    "subdomain {i}: operators have r = {}, basis r = {}",
                    ops.r(),
                    bases[i].r()
                )));
            }
            let keys: Vec<usize> = ops.coupling.keys().copied().collect();
            if keys != decomposition.neighbors(i) {
                return Err(Error::dim(format!(
                    "subdomain {i}: coupling blocks {keys:?} differ from adjacency {:?}",
                    decomposition.neighbors(i)
                )));
            }
            for (&j, block) in &ops.coupling {
                if block.ncols() != bases[j].r() {
                    return Err(Error::dim(format!("coupling block ({i}, {j}) has {} columns", block.ncols())));
                }
            }
            rows.push(r);
        }
        Ok(Self {
            layout,
            geometry,
            decomposition,
            weights,
            bases,
            operators,
            scaling,
            form,
            dt,
            t0,
            n_train,
            rows,
        })
    }

    pub fn k(&self) -> usize {
        self.decomposition.k()
    }

    pub fn reduced_dims(&self) -> Vec<usize> {
        self.bases.iter().map(|b| b.r()).collect()
    }

    /// Full-state rows belonging to subdomain `i`, variable-major.
    pub fn subdomain_rows(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    /// Scales `full_state` (original coordinates), slices it per subdomain and
    /// projects each slice onto its basis.
    pub fn reduce_initial_condition(&self, full_state: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        if full_state.len() != self.layout.state_dim() {
            return Err(Error::dim(format!(
                "initial condition has length {}, state dimension is {}",
                full_state.len(),
                self.layout.state_dim()
            )));
        }
        let scaled = self.scaling.apply_vector(full_state)?;
        (0..self.k())
            .map(|i| {
                let local = DVector::from_iterator(self.rows[i].len(), self.rows[i].iter().map(|&r| scaled[r]));
                self.bases[i].project_vector(&local)
            })
            .collect()
    }

    fn check_states(&self, states: &[DVector<f64>]) -> Result<()> {
        if states.len() != self.k() {
            return Err(Error::dim(format!("{} states for {} subdomains", states.len(), self.k())));
        }
        for (i, (q, b)) in states.iter().zip(&self.bases).enumerate() {
            if q.len() != b.r() {
                return Err(Error::dim(format!("subdomain {i}: state length {} but r = {}", q.len(), b.r())));
            }
        }
        Ok(())
    }

    /// Right-hand side of the coupled reduced system (the one-step map for the discrete form).
    pub fn evaluate_rhs(&self, states: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        self.check_states(states)?;
        Ok(Dynamics { operators: &self.operators }.rhs(states, &mut Vec::new()))
    }

    /// Reduced trajectories `r_i × (steps + 1)`, initial state in column 0.
    pub fn integrate(&self, init: &[DVector<f64>], steps: usize) -> Result<Vec<DMatrix<f64>>> {
        self.integrate_with(init, steps, |_, _| ControlFlow::Continue(()))
    }

    /// Like [`CoupledRom::integrate`] but stops early when `observe` breaks.
    pub fn integrate_with(
        &self,
        init: &[DVector<f64>],
        steps: usize,
        observe: impl FnMut(usize, &[DVector<f64>]) -> ControlFlow<()>,
    ) -> Result<Vec<DMatrix<f64>>> {
        self.check_states(init)?;
        Dynamics { operators: &self.operators }.run(self.form, self.dt, init, steps, observe)
    }

    /// Lifts reduced trajectories, blends them into full-domain states and
    /// maps back to original coordinates.
    pub fn reconstruct(&self, trajectories: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
        if trajectories.len() != self.k() {
            return Err(Error::dim("trajectory count differs from subdomain count"));
        }
        let n_cols = trajectories[0].ncols();
        if trajectories.iter().any(|t| t.ncols() != n_cols) {
            return Err(Error::dim("subdomain trajectories differ in length"));
        }
        let lifted: Vec<DMatrix<f64>> = trajectories
            .iter()
            .zip(&self.bases)
            .map(|(t, b)| b.lift(t))
            .collect::<Result<_>>()?;
        let n_x = self.layout.n_points();
        let n_s = self.layout.n_vars();
        let mut scaled = DMatrix::zeros(self.layout.state_dim(), n_cols);
        for s in 0..n_cols {
            let fields: Vec<DVector<f64>> = lifted
                .iter()
                .enumerate()
                .map(|(i, l)| extend_by_zeros(l.column(s).as_slice(), self.decomposition.dofs(i), n_s, n_x))
                .collect::<Result<_>>()?;
            scaled.set_column(s, &recombine(&fields, &self.weights)?);
        }
        self.scaling.unscale_matrix(&scaled)
    }

    /// Full pipeline from an original-coordinate initial state to a predicted
    /// snapshot set on the grid `t0 + s·dt`.
    pub fn predict_full(&self, init_full: &DVector<f64>, steps: usize) -> Result<SnapshotSet> {
        let init = self.reduce_initial_condition(init_full)?;
        let traj = self.integrate(&init, steps)?;
        let data = self.reconstruct(&traj)?;
        let time = TimeGrid::uniform(self.t0, self.dt, steps + 1, self.n_train.clamp(1, steps + 1))?;
        SnapshotSet::new(self.layout.clone(), self.geometry.clone(), time, data)
    }
}
