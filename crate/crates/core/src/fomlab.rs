//! Desk-scale full-order models: periodic viscous Burgers, an analytic
//! rotating multi-pulse field, and a static damped sinusoid.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::opinf::{quadratic_len, RomForm, RomOperators};
use crate::pod::PodBasis;
use crate::snapshot::{Geometry, SnapshotSet, StateLayout, TimeGrid};

#[derive(Debug, Clone, PartialEq)]
pub enum FomKind {
    /// `u_t = −u u_x + ν u_xx` from `offset + amplitude · sin(2π·mode·x/L)`.
    Burgers { nu: f64, amplitude: f64, offset: f64, mode: u32 },
    /// `N` Gaussian bumps of the given width travelling at `speed`.
    RotatingPulse { speed: f64, waves: u32, width: f64 },
    /// `e^{−decay·x} sin(frequency·x)`, constant in time.
    DampedSine { decay: f64, frequency: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FomSpec {
    pub kind: FomKind,
    pub n_x: usize,
    /// Domain extent `L`; the grid is `[0, L)` when periodic, `[0, L]` otherwise.
    pub length: f64,
    pub periodic: bool,
    pub dt: f64,
    /// Integration steps; `steps / stride + 1` snapshots are recorded.
    pub steps: usize,
    pub stride: usize,
    /// Training columns of the produced set; `None` marks all of them.
    pub n_train: Option<usize>,
    pub t0: f64,
    /// Uniform noise half-width relative to `max |u|` added to recorded snapshots.
    pub noise: f64,
    pub seed: u64,
}

impl FomSpec {
    pub fn new(kind: FomKind, n_x: usize, length: f64, dt: f64, steps: usize) -> Self {
        let periodic = !matches!(kind, FomKind::DampedSine { .. });
        Self { kind, n_x, length, periodic, dt, steps, stride: 1, n_train: None, t0: 0.0, noise: 0.0, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if self.stride == 0 {
            return Err(Error::invalid("stride must be at least 1"));
        }
        if self.n_x < 3 {
            return Err(Error::invalid("need at least 3 grid points"));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::invalid("domain length must be positive"));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::invalid("noise level must be nonnegative"));
        }
        match self.kind {
            FomKind::Burgers { nu, .. } => {
                if !(nu >= 0.0 && nu.is_finite()) {
                    return Err(Error::invalid(format!("viscosity must be nonnegative, got {nu}")));
                }
                if !self.periodic {
                    return Err(Error::invalid("Burgers model is periodic only"));
                }
            }
            FomKind::RotatingPulse { waves, width, .. } => {
                if waves == 0 || !(width > 0.0) {
                    return Err(Error::invalid("rotating pulse needs at least one wave and a positive width"));
                }
                if !self.periodic {
                    return Err(Error::invalid("rotating pulse is periodic only"));
                }
            }
            FomKind::DampedSine { .. } => {}
        }
        Ok(())
    }

    pub fn n_snapshots(&self) -> usize {
        self.steps / self.stride + 1
    }

    pub fn geometry(&self) -> Result<Geometry> {
        if self.periodic {
            Geometry::uniform_circle(self.length, self.n_x)
        } else {
            Geometry::uniform_interval(0.0, self.length, self.n_x)
        }
    }

    fn dx(&self) -> f64 {
        if self.periodic {
            self.length / self.n_x as f64
        } else {
            self.length / (self.n_x - 1) as f64
        }
    }

    fn burgers_nu(&self) -> Result<f64> {
        match self.kind {
            FomKind::Burgers { nu, .. } => Ok(nu),
            _ => Err(Error::invalid("not a Burgers specification")),
        }
    }

    /// Initial state on the grid.
    pub fn initial_condition(&self) -> Result<DVector<f64>> {
        let geom = self.geometry()?;
        Ok(DVector::from_iterator(self.n_x, geom.coords().iter().map(|&x| self.field(x, self.t0))))
    }

    fn field(&self, x: f64, t: f64) -> f64 {
        let l = self.length;
        match self.kind {
            FomKind::Burgers { amplitude, offset, mode, .. } => offset + amplitude * (TAU * mode as f64 * x / l).sin(),
            FomKind::RotatingPulse { speed, waves, width } => (1..=waves)
                .map(|w| {
                    let s = (x - speed * t - w as f64 * l / waves as f64).rem_euclid(l);
                    let d = if s > 0.5 * l { s - l } else { s };
                    (-0.5 * (d / width).powi(2)).exp()
                })
                .sum(),
            FomKind::DampedSine { decay, frequency } => (-decay * x).exp() * (frequency * x).sin(),
        }
    }

    /// Rejects time steps beyond the explicit diffusion or advection limits.
    pub fn check_cfl(&self) -> Result<()> {
        let nu = self.burgers_nu()?;
        let dx = self.dx();
        if nu > 0.0 && self.dt > 0.5 * dx * dx / nu {
            return Err(Error::Cfl(format!(
                "dt = {} exceeds diffusive limit 0.5·dx²/ν = {}",
                self.dt,
                0.5 * dx * dx / nu
            )));
        }
        let umax = self.initial_condition()?.amax();
        if umax > 0.0 && self.dt > dx / umax {
            return Err(Error::Cfl(format!("dt = {} exceeds advective limit dx/max|u| = {}", self.dt, dx / umax)));
        }
        Ok(())
    }
}

/// Discrete Burgers right-hand side `−u∘(D_x u) + ν D_xx u`, periodic central differences.
pub fn rhs_burgers(spec: &FomSpec, state: &[f64]) -> Result<Vec<f64>> {
    let nu = spec.burgers_nu()?;
    if state.len() != spec.n_x {
        return Err(Error::dim(format!("state has length {}, grid has {} points", state.len(), spec.n_x)));
    }
    let mut out = vec![0.0; state.len()];
    burgers_into(nu, spec.dx(), state, &mut out);
    Ok(out)
}

fn burgers_into(nu: f64, dx: f64, u: &[f64], out: &mut [f64]) {
    let n = u.len();
    let (c1, c2) = (0.5 / dx, nu / (dx * dx));
    for j in 0..n {
        let l = u[(j + n - 1) % n];
        let r = u[(j + 1) % n];
        out[j] = -u[j] * (r - l) * c1 + (r - 2.0 * u[j] + l) * c2;
    }
}

fn simulate_burgers(spec: &FomSpec, nu: f64) -> Result<DMatrix<f64>> {
    spec.check_cfl()?;
    let n = spec.n_x;
    let dx = spec.dx();
    let dt = spec.dt;
    let mut out = DMatrix::zeros(n, spec.n_snapshots());
    let mut u: Vec<f64> = spec.initial_condition()?.iter().copied().collect();
    out.set_column(0, &DVector::from_column_slice(&u));
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for s in 1..=spec.steps {
        burgers_into(nu, dx, &u, &mut k1);
        tmp.iter_mut().zip(&u).zip(&k1).for_each(|((t, u), k)| *t = u + 0.5 * dt * k);
        burgers_into(nu, dx, &tmp, &mut k2);
        tmp.iter_mut().zip(&u).zip(&k2).for_each(|((t, u), k)| *t = u + 0.5 * dt * k);
        burgers_into(nu, dx, &tmp, &mut k3);
        tmp.iter_mut().zip(&u).zip(&k3).for_each(|((t, u), k)| *t = u + dt * k);
        burgers_into(nu, dx, &tmp, &mut k4);
        for j in 0..n {
            u[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged(s));
        }
        if s % spec.stride == 0 {
            out.set_column(s / spec.stride, &DVector::from_column_slice(&u));
        }
    }
    Ok(out)
}

pub fn simulate(spec: &FomSpec) -> Result<SnapshotSet> {
    spec.validate()?;
    let geometry = spec.geometry()?;
    let n_t = spec.n_snapshots();
    let record_dt = spec.dt * spec.stride as f64;
    let mut data = match spec.kind {
        FomKind::Burgers { nu, .. } => simulate_burgers(spec, nu)?,
        _ => DMatrix::from_fn(spec.n_x, n_t, |i, k| spec.field(geometry.coords()[i], spec.t0 + k as f64 * record_dt)),
    };
    if spec.noise > 0.0 {
        let amp = spec.noise * data.amax();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        data.iter_mut().for_each(|v| *v += amp * rng.random_range(-1.0..=1.0));
    }
    let n_train = spec.n_train.unwrap_or(n_t);
    if n_train == 0 || n_train > n_t {
        return Err(Error::invalid(format!("n_train = {n_train} outside 1..={n_t}")));
    }
    let time = TimeGrid::uniform(spec.t0, record_dt, n_t, n_train)?;
    SnapshotSet::new(StateLayout::scalar("u", spec.n_x)?, geometry, time, data)
}

/// Intrusive Galerkin projection of the discrete Burgers operators onto `basis`.
pub fn galerkin_operators(spec: &FomSpec, basis: &PodBasis) -> Result<RomOperators> {
    let nu = spec.burgers_nu()?;
    let n = spec.n_x;
    let v = &basis.basis;
    if v.nrows() != n {
        return Err(Error::dim(format!("basis has {} rows, grid has {n} points", v.nrows())));
    }
    let r = v.ncols();
    let dx = spec.dx();
    let shift = |m: &DMatrix<f64>, by: usize| DMatrix::from_fn(n, r, |j, c| m[((j + by) % n, c)]);
    let (right, left) = (shift(v, 1), shift(v, n - 1));
    let dxx_v = (&right - v * 2.0 + &left) * (nu / (dx * dx));
    let dx_v = (&right - &left) * (0.5 / dx);
    let linear = v.transpose() * dxx_v;
    let mut quadratic = DMatrix::zeros(r, quadratic_len(r));
    // g[i][a][b] = −Σ_j V_ji V_ja (D_x V)_jb
    let mut col = 0;
    for a in 0..r {
        for b in a..r {
            let prod_ab = v.column(a).component_mul(&dx_v.column(b));
            let prod_ba = v.column(b).component_mul(&dx_v.column(a));
            let term = if a == b { prod_ab } else { prod_ab + prod_ba };
            let projected = -(v.transpose() * term);
            quadratic.set_column(col, &projected);
            col += 1;
        }
    }
    Ok(RomOperators {
        linear,
        quadratic,
        coupling: Default::default(),
        constant: None,
        form: RomForm::Continuous,
    })
}
