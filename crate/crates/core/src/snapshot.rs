//! Snapshot data model and the SNAP on-disk format.
//!
//! A [`SnapshotSet`] holds an `n × n_t` matrix whose column `k` is the full
//! state at time `t_k`. Rows are variable-major: the entry for variable `v`
//! at spatial point `x` lives in row `v * n_x + x`.

use std::f64::consts::TAU;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::io::{LeReader, LeWriter};

pub const SNAP_MAGIC: [u8; 4] = *b"DDOI";
pub const SNAP_VERSION: u32 = 1;

/// Set when the geometry is periodic (circle in 1D, annulus in 2D).
pub const SNAP_FLAG_PERIODIC: u32 = 1 << 0;
/// Set when the metadata trailer (n_train, period, units) follows the data block.
pub const SNAP_FLAG_TRAILER: u32 = 1 << 1;

#[derive(Debug, Clone, PartialEq)]
pub struct StateLayout {
    names: Vec<String>,
    units: Vec<String>,
    n_points: usize,
}

impl StateLayout {
    pub fn new(names: Vec<String>, units: Vec<String>, n_points: usize) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::invalid("layout needs at least one state variable"));
        }
        if n_points == 0 {
            return Err(Error::invalid("layout needs at least one spatial point"));
        }
        if units.len() != names.len() {
            return Err(Error::dim(format!(
                "{} variable names but {} units",
                names.len(),
                units.len()
            )));
        }
        Ok(Self { names, units, n_points })
    }

    /// Single-variable layout with an empty unit string.
    pub fn scalar(name: &str, n_points: usize) -> Result<Self> {
        Self::new(vec![name.to_string()], vec![String::new()], n_points)
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Total state dimension `n = n_s * n_x`.
    pub fn state_dim(&self) -> usize {
        self.names.len() * self.n_points
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn units(&self) -> &[String] {
        &self.units
    }

    #[inline]
    pub fn row(&self, variable: usize, point: usize) -> usize {
        variable * self.n_points + point
    }

    pub(crate) fn with_points(&self, n_points: usize) -> Self {
        Self { names: self.names.clone(), units: self.units.clone(), n_points }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    dim: usize,
    coords: Vec<f64>,
    periodic: bool,
    period: Option<f64>,
    angles: Option<Vec<f64>>,
}

impl Geometry {
    /// General constructor. `coords` is point-major (`n_x * dim` values).
    ///
    /// Periodic 1D geometries are circles and need the circumference in
    /// `period`; periodic 2D geometries are annuli centered at the origin.
    pub fn new(dim: usize, coords: Vec<f64>, periodic: bool, period: Option<f64>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::invalid(format!("spatial dimension {dim} unsupported (1 or 2)")));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::dim(format!(
                "{} coordinate values do not form points of dimension {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite(" in coordinates".into()));
        }
        let period = match (periodic, dim) {
            (true, 1) => match period {
                Some(p) if p > 0.0 && p.is_finite() => Some(p),
                _ => return Err(Error::invalid("periodic 1D geometry needs a positive period")),
            },
            _ => None,
        };
        let angles = if periodic {
            let a = match dim {
                1 => {
                    let l = period.unwrap();
                    coords.iter().map(|&x| wrap_angle(TAU * x.rem_euclid(l) / l)).collect()
                }
                _ => coords
                    .chunks_exact(2)
                    .map(|p| wrap_angle(p[1].atan2(p[0])))
                    .collect(),
            };
            Some(a)
        } else {
            None
        };
        Ok(Self { dim, coords, periodic, period, angles })
    }

    pub fn interval(coords: Vec<f64>) -> Result<Self> {
        Self::new(1, coords, false, None)
    }

    pub fn circle(coords: Vec<f64>, period: f64) -> Result<Self> {
        Self::new(1, coords, true, Some(period))
    }

    pub fn annulus(points: &[[f64; 2]]) -> Result<Self> {
        Self::new(2, points.iter().flatten().copied().collect(), true, None)
    }

    /// `n` uniformly spaced points on `[a, b]`, endpoints included.
    pub fn uniform_interval(a: f64, b: f64, n: usize) -> Result<Self> {
        let coords = if n == 1 {
            vec![a]
        } else {
            (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
        };
        Self::interval(coords)
    }

    /// `n` uniformly spaced points on a circle of circumference `length`,
    /// starting at 0 and excluding the endpoint.
    pub fn uniform_circle(length: f64, n: usize) -> Result<Self> {
        Self::circle((0..n).map(|i| length * i as f64 / n as f64).collect(), length)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_points(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// First coordinate of every point.
    pub fn first_axis(&self) -> Vec<f64> {
        self.coords.iter().step_by(self.dim).copied().collect()
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    /// Angle in `[0, 2π)` per point, for periodic geometries.
    pub fn angles(&self) -> Option<&[f64]> {
        self.angles.as_deref()
    }

    pub fn radius(&self, i: usize) -> f64 {
        let p = self.point(i);
        p.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub(crate) fn restrict(&self, indices: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        let angles = self.angles.as_ref().map(|a| indices.iter().map(|&i| a[i]).collect());
        Self { dim: self.dim, coords, periodic: self.periodic, period: self.period, angles }
    }
}

fn wrap_angle(a: f64) -> f64 {
    let a = a.rem_euclid(TAU);
    if a >= TAU {
        0.0
    } else {
        a
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    timestamps: Vec<f64>,
    n_train: usize,
}

impl TimeGrid {
    /// `timestamps` must be strictly increasing and `1 <= n_train <= len`.
    pub fn new(timestamps: Vec<f64>, n_train: usize) -> Result<Self> {
        if timestamps.is_empty() {
            return Err(Error::invalid("time grid is empty"));
        }
        if timestamps.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite(" in timestamps".into()));
        }
        if timestamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("timestamps must be strictly increasing"));
        }
        if n_train == 0 || n_train > timestamps.len() {
            return Err(Error::invalid(format!(
                "training count {n_train} outside [1, {}]",
                timestamps.len()
            )));
        }
        Ok(Self { timestamps, n_train })
    }

    pub fn uniform(t0: f64, dt: f64, n: usize, n_train: usize) -> Result<Self> {
        Self::new((0..n).map(|k| t0 + dt * k as f64).collect(), n_train)
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn t_init(&self) -> f64 {
        self.timestamps[0]
    }

    pub fn t_train(&self) -> f64 {
        self.timestamps[self.n_train - 1]
    }

    pub fn t_final(&self) -> f64 {
        *self.timestamps.last().unwrap()
    }

    /// Common spacing if the grid is uniform to a relative tolerance of 1e-9.
    pub fn uniform_dt(&self) -> Option<f64> {
        if self.timestamps.len() < 2 {
            return None;
        }
        let dt = (self.t_final() - self.t_init()) / (self.timestamps.len() - 1) as f64;
        let ok = self
            .timestamps
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.abs().max(f64::MIN_POSITIVE));
        ok.then_some(dt)
    }

    pub(crate) fn with_train(&self, n_train: usize) -> Result<Self> {
        Self::new(self.timestamps.clone(), n_train)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    layout: StateLayout,
    geometry: Geometry,
    time: TimeGrid,
    data: DMatrix<f64>,
}

impl SnapshotSet {
    pub fn new(layout: StateLayout, geometry: Geometry, time: TimeGrid, data: DMatrix<f64>) -> Result<Self> {
        if geometry.n_points() != layout.n_points() {
            return Err(Error::dim(format!(
                "geometry has {} points, layout {}",
                geometry.n_points(),
                layout.n_points()
            )));
        }
        if data.nrows() != layout.state_dim() {
            return Err(Error::dim(format!(
                "data has {} rows, layout needs {}",
                data.nrows(),
                layout.state_dim()
            )));
        }
        if data.ncols() != time.len() {
            return Err(Error::dim(format!(
                "data has {} columns, time grid {}",
                data.ncols(),
                time.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                " at row {}, column {}",
                pos % data.nrows(),
                pos / data.nrows()
            )));
        }
        Ok(Self { layout, geometry, time, data })
    }

    /// Builds a set by evaluating `f(variable, point, snapshot)`.
    pub fn from_fn(
        layout: StateLayout,
        geometry: Geometry,
        time: TimeGrid,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let n_x = layout.n_points();
        let data = DMatrix::from_fn(layout.state_dim(), time.len(), |row, k| f(row / n_x, row % n_x, k));
        Self::new(layout, geometry, time, data)
    }

    pub fn layout(&self) -> &StateLayout {
        &self.layout
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.data
    }

    pub fn n_snapshots(&self) -> usize {
        self.data.ncols()
    }

    pub fn value(&self, variable: usize, point: usize, snapshot: usize) -> f64 {
        self.data[(self.layout.row(variable, point), snapshot)]
    }

    /// The `n_x × n_t` block of one variable.
    pub fn variable_block(&self, variable: usize) -> nalgebra::DMatrixView<'_, f64> {
        let n_x = self.layout.n_points();
        self.data.rows(variable * n_x, n_x)
    }

    /// Same metadata with new data of identical shape (validated).
    pub fn with_data(&self, data: DMatrix<f64>) -> Result<Self> {
        Self::new(self.layout.clone(), self.geometry.clone(), self.time.clone(), data)
    }

    /// Same data with a different training count.
    pub fn with_train_count(&self, n_train: usize) -> Result<Self> {
        Ok(Self { time: self.time.with_train(n_train)?, ..self.clone() })
    }

    /// Leading `n` columns.
    pub fn leading_columns(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n_snapshots() {
            return Err(Error::dim(format!("cannot take {n} of {} columns", self.n_snapshots())));
        }
        let time = TimeGrid::new(self.time.timestamps[..n].to_vec(), self.time.n_train.min(n))?;
        Ok(Self { time, data: self.data.columns(0, n).into_owned(), ..self.clone() })
    }

    /// Restricts every variable block to the given spatial points, in the given order.
    pub fn slice_dofs(&self, spatial_indices: &[usize]) -> Result<Self> {
        let n_x = self.layout.n_points();
        check_index_list(spatial_indices, n_x)?;
        let rows = dof_rows(&self.layout, spatial_indices);
        let data = self.data.select_rows(rows.iter());
        Ok(Self {
            layout: self.layout.with_points(spatial_indices.len()),
            geometry: self.geometry.restrict(spatial_indices),
            time: self.time.clone(),
            data,
        })
    }

    pub fn save(&self, destination: impl AsRef<Path>) -> Result<()> {
        let file = File::create(destination)?;
        self.write_to(BufWriter::new(file))?;
        Ok(())
    }

    pub fn load(source: impl AsRef<Path>) -> Result<Self> {
        let file = File::open(source)?;
        Self::read_from(BufReader::new(file))
    }

    /// Writes the SNAP encoding. Refuses non-finite data.
    pub fn write_to<W: Write>(&self, sink: W) -> Result<W> {
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(String::new()));
        }
        let mut w = LeWriter::new(sink);
        let mut flags = SNAP_FLAG_TRAILER;
        if self.geometry.periodic {
            flags |= SNAP_FLAG_PERIODIC;
        }
        w.bytes(&SNAP_MAGIC)?;
        w.u32(SNAP_VERSION)?;
        w.u32(flags)?;
        w.usize(self.layout.n_vars())?;
        w.usize(self.layout.n_points())?;
        w.usize(self.n_snapshots())?;
        w.usize(self.geometry.dim)?;
        for name in &self.layout.names {
            w.cstr(name)?;
        }
        w.f64s(&self.geometry.coords)?;
        w.f64s(&self.time.timestamps)?;
        // nalgebra storage is column-major, which is exactly snapshot-major.
        w.f64s(self.data.as_slice())?;
        w.usize(self.time.n_train)?;
        w.f64(self.geometry.period.unwrap_or(0.0))?;
        for unit in &self.layout.units {
            w.cstr(unit)?;
        }
        w.finish()
    }

    pub fn read_from<R: Read>(source: R) -> Result<Self> {
        let mut r = LeReader::new(source);
        let magic: [u8; 4] = r.exact("magic")?;
        if magic != SNAP_MAGIC {
            return Err(Error::BadMagic { expected: SNAP_MAGIC, found: magic });
        }
        let version = r.u32("version")?;
        if version != SNAP_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let flags = r.u32("flags")?;
        let n_s = r.count("n_s")?;
        let n_x = r.count("n_x")?;
        let n_t = r.count("n_t")?;
        let d = r.count("d")?;
        let names = (0..n_s).map(|_| r.cstr("variable names")).collect::<Result<Vec<_>>>()?;
        let coords = r.f64s(n_x * d, "coordinates")?;
        let timestamps = r.f64s(n_t, "timestamps")?;
        let values = r.f64s(n_s * n_x * n_t, "snapshot data")?;
        let periodic = flags & SNAP_FLAG_PERIODIC != 0;
        let (n_train, period, units) = if flags & SNAP_FLAG_TRAILER != 0 {
            let n_train = r.count("trailer")?;
            let period = r.f64("trailer")?;
            let units = (0..n_s).map(|_| r.cstr("trailer")).collect::<Result<Vec<_>>>()?;
            (n_train, period, units)
        } else {
            (n_t, 0.0, vec![String::new(); n_s])
        };
        if !r.at_end()? {
            return Err(Error::dim("trailing bytes after SNAP payload"));
        }
        let layout = StateLayout::new(names, units, n_x)?;
        let period = (periodic && d == 1).then_some(period);
        let geometry = Geometry::new(d, coords, periodic, period)?;
        let time = TimeGrid::new(timestamps, n_train)?;
        let data = DMatrix::from_vec(n_s * n_x, n_t, values);
        Self::new(layout, geometry, time, data)
    }
}

/// Rejects out-of-range and duplicate indices.
pub(crate) fn check_index_list(indices: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &i in indices {
        if i >= n {
            return Err(Error::Index(format!("spatial index {i} out of range [0, {n})")));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::Index(format!("duplicate spatial index {i}")));
        }
    }
    Ok(())
}

/// Row indices of the full state that belong to the given spatial points,
/// variable-major.
pub fn dof_rows(layout: &StateLayout, spatial_indices: &[usize]) -> Vec<usize> {
    let mut rows = Vec::with_capacity(layout.n_vars() * spatial_indices.len());
    for v in 0..layout.n_vars() {
        rows.extend(spatial_indices.iter().map(|&x| layout.row(v, x)));
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_set() -> SnapshotSet {
        let layout = StateLayout::scalar("u", 4).unwrap();
        let geom = Geometry::uniform_interval(0.0, 1.0, 4).unwrap();
        let time = TimeGrid::uniform(0.0, 0.5, 3, 2).unwrap();
        SnapshotSet::from_fn(layout, geom, time, |_, x, k| (x * 10 + k) as f64).unwrap()
    }

    fn encode(set: &SnapshotSet) -> Vec<u8> {
        set.write_to(Vec::new()).unwrap()
    }

    #[test]
    fn payload_size_matches_header_arithmetic() {
        let set = small_set();
        let bytes = encode(&set);
        let header = 4 + 4 + 4 + 4 * 8;
        let names = 2; // "u\0"
        let coords = 4 * 8;
        let times = 3 * 8;
        let payload = 12 * 8;
        let trailer = 8 + 8 + 1;
        assert_eq!(bytes.len(), header + names + coords + times + payload + trailer);
        assert_eq!(payload, 96);
    }

    #[test]
    fn round_trip_is_exact() {
        let set = small_set();
        let back = SnapshotSet::read_from(&encode(&set)[..]).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn nan_is_refused_on_construction_and_write() {
        let layout = StateLayout::scalar("u", 2).unwrap();
        let geom = Geometry::uniform_interval(0.0, 1.0, 2).unwrap();
        let time = TimeGrid::uniform(0.0, 1.0, 2, 1).unwrap();
        let mut data = DMatrix::zeros(2, 2);
        data[(1, 1)] = f64::NAN;
        let err = SnapshotSet::new(layout, geom, time, data).unwrap_err();
        assert!(err.to_string().contains("non-finite data"));

        let mut set = small_set();
        set.data[(0, 0)] = f64::NAN;
        let err = set.write_to(Vec::new()).unwrap_err();
        assert!(err.to_string().contains("non-finite data"));
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode(&small_set());
        bytes[0] = b'X';
        let err = SnapshotSet::read_from(&bytes[..]).unwrap_err();
        assert!(err.to_string().contains("bad magic"), "{err}");
    }

    #[test]
    fn unsupported_version() {
        let mut bytes = encode(&small_set());
        bytes[4] = 7;
        let err = SnapshotSet::read_from(&bytes[..]).unwrap_err();
        assert!(matches!(err, Error::UnsupportedVersion(7)));
    }

    #[test]
    fn header_claiming_more_snapshots_is_truncated() {
        let set = small_set();
        let mut bytes = encode(&set);
        // n_t lives after magic, version, flags, n_s, n_x.
        let off = 4 + 4 + 4 + 8 + 8;
        bytes[off..off + 8].copy_from_slice(&5u64.to_le_bytes());
        // drop the trailer so the file ends exactly after 4 snapshots' worth would have
        let err = SnapshotSet::read_from(&bytes[..]).unwrap_err();
        assert!(err.to_string().contains("truncated payload"), "{err}");
    }

    #[test]
    fn variable_major_layout() {
        let layout = StateLayout::new(vec!["a".into(), "b".into()], vec!["".into(), "".into()], 3).unwrap();
        let geom = Geometry::uniform_interval(0.0, 1.0, 3).unwrap();
        let time = TimeGrid::uniform(0.0, 1.0, 2, 2).unwrap();
        let set = SnapshotSet::from_fn(layout, geom, time, |v, x, k| (100 * v + 10 * x + k) as f64).unwrap();
        for v in 0..2 {
            for x in 0..3 {
                for k in 0..2 {
                    assert_eq!(set.data()[(v * 3 + x, k)], (100 * v + 10 * x + k) as f64);
                }
            }
        }
    }

    #[test]
    fn slice_identity_and_single_point() {
        let set = small_set();
        assert_eq!(set.slice_dofs(&[0, 1, 2, 3]).unwrap(), set);
        let one = set.slice_dofs(&[0]).unwrap();
        assert_eq!(one.data().nrows(), 1);
        for k in 0..3 {
            assert_eq!(one.data()[(0, k)], set.value(0, 0, k));
        }
    }

    #[test]
    fn overlapping_slices_share_values() {
        let set = small_set();
        let a = set.slice_dofs(&[0, 1, 2]).unwrap();
        let b = set.slice_dofs(&[1, 2, 3]).unwrap();
        assert_eq!(a.data().rows(1, 2), b.data().rows(0, 2));
    }

    #[test]
    fn slice_rejects_bad_indices() {
        let set = small_set();
        assert!(matches!(set.slice_dofs(&[4]), Err(Error::Index(_))));
        assert!(matches!(set.slice_dofs(&[1, 1]), Err(Error::Index(_))));
    }

    #[test]
    fn circle_angles_are_wrapped() {
        let g = Geometry::circle(vec![0.0, 0.5, 1.0, -0.25], 1.0).unwrap();
        let a = g.angles().unwrap();
        assert_eq!(a[0], 0.0);
        assert!((a[1] - std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(a[2], 0.0);
        assert!((a[3] - 1.5 * std::f64::consts::PI).abs() < 1e-15);
        assert!(a.iter().all(|&t| (0.0..TAU).contains(&t)));
    }
}
