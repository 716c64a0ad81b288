//! DDRM: the self-contained binary container for a trained [`CoupledRom`].
//!
//! All values little-endian, matrices column-major:
//!
//! ```text
//! "DDRM" u32 version u32 form u64 k
//! per subdomain:
//!   u64 r  u64 n_rows  f64[n_rows·r] basis
//!   u64 n_sv  f64[n_sv] singular values
//!   f64[r·r] A  f64[r·r(r+1)/2] H
//!   u8 has_constant  [f64[r] c]
//!   u64 n_neighbors, per neighbor: u64 j  u64 r_j  f64[r·r_j]
//! u32 topology  u64 n_x
//! per subdomain: f64 interior_lo  f64 interior_hi  u64 n_dofs  u64[n_dofs]
//! f64[k·n_x] blending weights, subdomain-major
//! u32 scaling kind  u64 n_s  u32[n_s] transforms  f64[n_s] scales
//! u64 n  f64[n] mean field
//! cstr[n_s] names  cstr[n_s] units
//! u64 d  u8 periodic  f64 period  f64[n_x·d] coordinates
//! f64 dt  f64 t0  u64 n_train
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::CoupledRom;
use crate::decomp::{BlendingWeights, Decomposition, Subdomain, Topology};
use crate::error::{Error, Result};
use crate::io::{LeReader, LeWriter};
use crate::opinf::{quadratic_len, RomForm, RomOperators};
use crate::pod::PodBasis;
use crate::preprocess::{ScalingKind, ScalingRecord, Transform};
use crate::snapshot::{Geometry, StateLayout};

pub const DDRM_MAGIC: [u8; 4] = *b"DDRM";
pub const DDRM_VERSION: u32 = 1;

fn form_code(form: RomForm) -> u32 {
    match form {
        RomForm::Continuous => 0,
        RomForm::Discrete => 1,
    }
}

fn matrix<R: Read>(r: &mut LeReader<R>, rows: usize, cols: usize, what: &'static str) -> Result<DMatrix<f64>> {
    Ok(DMatrix::from_vec(rows, cols, r.f64s(rows * cols, what)?))
}

impl CoupledRom {
    pub fn save(&self, destination: impl AsRef<Path>) -> Result<()> {
        let file = File::create(destination)?;
        self.write_to(BufWriter::new(file))?;
        Ok(())
    }

    pub fn load(source: impl AsRef<Path>) -> Result<Self> {
        let file = File::open(source)?;
        Self::read_from(BufReader::new(file))
    }

    pub fn write_to<W: Write>(&self, sink: W) -> Result<W> {
        let mut w = LeWriter::new(sink);
        w.bytes(&DDRM_MAGIC)?;
        w.u32(DDRM_VERSION)?;
        w.u32(form_code(self.form))?;
        w.usize(self.k())?;
        for (basis, ops) in self.bases.iter().zip(&self.operators) {
            w.usize(basis.r())?;
            w.usize(basis.n_rows())?;
            w.f64s(basis.basis.as_slice())?;
            w.usize(basis.singular_values.len())?;
            w.f64s(&basis.singular_values)?;
            w.f64s(ops.linear.as_slice())?;
            w.f64s(ops.quadratic.as_slice())?;
            match &ops.constant {
                Some(c) => {
                    w.u8(1)?;
                    w.f64s(c.as_slice())?;
                }
                None => w.u8(0)?,
            }
            w.usize(ops.coupling.len())?;
            for (&j, block) in &ops.coupling {
                w.usize(j)?;
                w.usize(block.ncols())?;
                w.f64s(block.as_slice())?;
            }
        }
        w.u32(match self.decomposition.topology() {
            Topology::Interval => 0,
            Topology::Annular => 1,
        })?;
        w.usize(self.decomposition.n_points())?;
        for s in self.decomposition.subdomains() {
            w.f64(s.interior.0)?;
            w.f64(s.interior.1)?;
            w.usize(s.dofs.len())?;
            for &d in &s.dofs {
                w.usize(d)?;
            }
        }
        for wi in &self.weights.weights {
            w.f64s(wi)?;
        }
        w.u32(match self.scaling.kind {
            ScalingKind::MaxAbs => 0,
            ScalingKind::StdDev => 1,
        })?;
        w.usize(self.scaling.n_vars())?;
        for t in &self.scaling.transforms {
            w.u32(match t {
                Transform::Identity => 0,
                Transform::Reciprocal => 1,
            })?;
        }
        w.f64s(&self.scaling.scale)?;
        w.usize(self.scaling.mean_field.len())?;
        w.f64s(self.scaling.mean_field.as_slice())?;
        for name in self.layout.names() {
            w.cstr(name)?;
        }
        for unit in self.layout.units() {
            w.cstr(unit)?;
        }
        w.usize(self.geometry.dim())?;
        w.u8(self.geometry.is_periodic() as u8)?;
        w.f64(self.geometry.period().unwrap_or(0.0))?;
        w.f64s(self.geometry.coords())?;
        w.f64(self.dt)?;
        w.f64(self.t0)?;
        w.usize(self.n_train)?;
        w.finish()
    }

    pub fn read_from<R: Read>(source: R) -> Result<Self> {
        let mut r = LeReader::new(source);
        let magic: [u8; 4] = r.exact("magic")?;
        if magic != DDRM_MAGIC {
            return Err(Error::BadMagic { expected: DDRM_MAGIC, found: magic });
        }
        let version = r.u32("version")?;
        if version != DDRM_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let form = match r.u32("form")? {
            0 => RomForm::Continuous,
            1 => RomForm::Discrete,
            other => return Err(Error::invalid(format!("unknown ROM form code {other}"))),
        };
        let k = r.count("subdomain count")?;
        if k == 0 {
            return Err(Error::invalid("artifact has no subdomains"));
        }
        let mut bases = Vec::with_capacity(k);
        let mut operators = Vec::with_capacity(k);
        for i in 0..k {
            let ri = r.count("reduced dimension")?;
            let rows = r.count("basis rows")?;
            let basis = matrix(&mut r, rows, ri, "basis")?;
            let n_sv = r.count("singular value count")?;
            let singular_values = r.f64s(n_sv, "singular values")?;
            let linear = matrix(&mut r, ri, ri, "linear operator")?;
            let quadratic = matrix(&mut r, ri, quadratic_len(ri), "quadratic operator")?;
            let constant = match r.u8("constant flag")? {
                0 => None,
                1 => Some(DVector::from_vec(r.f64s(ri, "constant term")?)),
                other => return Err(Error::invalid(format!("bad constant flag {other}"))),
            };
            let n_nb = r.count("neighbor count")?;
            let mut coupling = BTreeMap::new();
            for _ in 0..n_nb {
                let j = r.count("neighbor id")?;
                let rj = r.count("neighbor dimension")?;
                if coupling.insert(j, matrix(&mut r, ri, rj, "coupling block")?).is_some() {
                    return Err(Error::invalid(format!("subdomain {i}: duplicate neighbor {j}")));
                }
            }
            bases.push(PodBasis { basis, singular_values, subdomain: i });
            operators.push(RomOperators { linear, quadratic, coupling, constant, form });
        }
        let topology = match r.u32("topology")? {
            0 => Topology::Interval,
            1 => Topology::Annular,
            other => return Err(Error::invalid(format!("unknown topology code {other}"))),
        };
        let n_x = r.count("n_x")?;
        let mut subdomains = Vec::with_capacity(k);
        for ops in &operators {
            let lo = r.f64("interior")?;
            let hi = r.f64("interior")?;
            let n = r.count("dof count")?;
            let dofs = (0..n).map(|_| r.count("dof index")).collect::<Result<Vec<_>>>()?;
            let neighbors: BTreeSet<usize> = ops.coupling.keys().copied().collect();
            subdomains.push(Subdomain { dofs, interior: (lo, hi), neighbors });
        }
        let decomposition = if k == 1 && subdomains[0].interior.0 == f64::NEG_INFINITY {
            Decomposition::single(n_x)
        } else {
            Decomposition::from_parts(topology, n_x, subdomains)?
        };
        let weights = BlendingWeights {
            weights: (0..k).map(|_| r.f64s(n_x, "blending weights")).collect::<Result<_>>()?,
        };
        let kind = match r.u32("scaling kind")? {
            0 => ScalingKind::MaxAbs,
            1 => ScalingKind::StdDev,
            other => return Err(Error::invalid(format!("unknown scaling code {other}"))),
        };
        let n_s = r.count("variable count")?;
        let transforms = (0..n_s)
            .map(|_| match r.u32("transforms")? {
                0 => Ok(Transform::Identity),
                1 => Ok(Transform::Reciprocal),
                other => Err(Error::invalid(format!("unknown transform code {other}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let scale = r.f64s(n_s, "scales")?;
        let n = r.count("mean field length")?;
        let mean_field = DVector::from_vec(r.f64s(n, "mean field")?);
        let names = (0..n_s).map(|_| r.cstr("variable names")).collect::<Result<Vec<_>>>()?;
        let units = (0..n_s).map(|_| r.cstr("units")).collect::<Result<Vec<_>>>()?;
        let d = r.count("spatial dimension")?;
        let periodic = r.u8("periodic flag")? != 0;
        let period = r.f64("period")?;
        let coords = r.f64s(n_x * d, "coordinates")?;
        let dt = r.f64("dt")?;
        let t0 = r.f64("t0")?;
        let n_train = r.count("n_train")?;
        if !r.at_end()? {
            return Err(Error::dim("trailing bytes after DDRM payload"));
        }
        let layout = StateLayout::new(names, units, n_x)?;
        let geometry = Geometry::new(d, coords, periodic, (periodic && d == 1).then_some(period))?;
        let scaling = ScalingRecord { mean_field, scale, kind, transforms };
        CoupledRom::new(layout, geometry, decomposition, weights, bases, operators, scaling, dt, t0, n_train)
    }
}
