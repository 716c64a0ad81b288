//! Error metrics and diagnostic extracts in original state coordinates.

use std::ops::Range;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::snapshot::{check_index_list, SnapshotSet};

pub const DEFAULT_BIN_THRESHOLDS: [f64; 3] = [0.05, 0.10, 0.20];
/// Relative floor on pointwise-error denominators, times `max |ref|`.
pub const DEFAULT_FLOOR_FACTOR: f64 = 1e-12;

fn check_pair(reference: &SnapshotSet, approx: &SnapshotSet, variable: usize) -> Result<()> {
    if reference.layout().state_dim() != approx.layout().state_dim()
        || reference.layout().n_vars() != approx.layout().n_vars()
        || reference.n_snapshots() != approx.n_snapshots()
    {
        return Err(Error::dim(format!(
            "reference is {}×{} ({} variables), approximation is {}×{} ({} variables)",
            reference.data().nrows(),
            reference.n_snapshots(),
            reference.layout().n_vars(),
            approx.data().nrows(),
            approx.n_snapshots(),
            approx.layout().n_vars()
        )));
    }
    if variable >= reference.layout().n_vars() {
        return Err(Error::Index(format!("variable {variable} out of range")));
    }
    Ok(())
}

fn check_columns(columns: &Range<usize>, n_t: usize) -> Result<()> {
    if columns.start >= columns.end || columns.end > n_t {
        return Err(Error::Index(format!("column range {columns:?} invalid for {n_t} snapshots")));
    }
    Ok(())
}

/// `‖X_ref − X_approx‖²_F / ‖X_ref‖²_F` over one variable block and column range.
pub fn squared_l2_relative_error(
    reference: &SnapshotSet,
    approx: &SnapshotSet,
    variable: usize,
    columns: Range<usize>,
) -> Result<f64> {
    check_pair(reference, approx, variable)?;
    check_columns(&columns, reference.n_snapshots())?;
    let width = columns.end - columns.start;
    let a = reference.variable_block(variable);
    let b = approx.variable_block(variable);
    let a = a.columns(columns.start, width);
    let b = b.columns(columns.start, width);
    let den = a.norm_squared();
    if den == 0.0 {
        return Err(Error::invalid(format!("reference block of variable {variable} is identically zero")));
    }
    Ok((a - b).norm_squared() / den)
}

/// The same ratio evaluated separately for every column in `columns`.
pub fn squared_l2_relative_error_per_column(
    reference: &SnapshotSet,
    approx: &SnapshotSet,
    variable: usize,
    columns: Range<usize>,
) -> Result<Vec<f64>> {
    check_pair(reference, approx, variable)?;
    check_columns(&columns, reference.n_snapshots())?;
    let a = reference.variable_block(variable);
    let b = approx.variable_block(variable);
    columns
        .map(|c| {
            let den = a.column(c).norm_squared();
            if den == 0.0 {
                return Err(Error::invalid(format!("reference column {c} of variable {variable} is zero")));
            }
            Ok((a.column(c) - b.column(c)).norm_squared() / den)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableError {
    pub name: String,
    pub training_error: f64,
    /// `None` when the sets end at the training horizon.
    pub prediction_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub per_variable: Vec<VariableError>,
    /// First prediction column; equals the reference's training count.
    pub horizon_split: usize,
}

/// Training and prediction errors for every variable, split at the reference's `n_train`.
pub fn error_report(reference: &SnapshotSet, approx: &SnapshotSet) -> Result<ErrorReport> {
    check_pair(reference, approx, 0)?;
    let split = reference.time().n_train();
    let n_t = reference.n_snapshots();
    let per_variable = (0..reference.layout().n_vars())
        .map(|v| {
            Ok(VariableError {
                name: reference.layout().names()[v].clone(),
                training_error: squared_l2_relative_error(reference, approx, v, 0..split)?,
                prediction_error: if split < n_t {
                    Some(squared_l2_relative_error(reference, approx, v, split..n_t)?)
                } else {
                    None
                },
            })
        })
        .collect::<Result<_>>()?;
    Ok(ErrorReport { per_variable, horizon_split: split })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinReport {
    pub thresholds: Vec<f64>,
    pub times: Vec<f64>,
    /// `fractions[t][b]`: share of spatial points of snapshot `t` in bin `b`;
    /// there are `thresholds.len() + 1` bins.
    pub fractions: Vec<Vec<f64>>,
}

/// Bin index for a relative error: bin `b < m` holds `t_{b-1} < re ≤ t_b`, bin `m` holds `re > t_{m-1}`.
pub fn bin_index(thresholds: &[f64], re: f64) -> usize {
    thresholds.iter().position(|&t| re <= t).unwrap_or(thresholds.len())
}

/// Pointwise relative-error distribution per snapshot.
///
/// `re(x) = |approx − ref| / max(|ref|, floor)`; `floor = None` selects
/// `DEFAULT_FLOOR_FACTOR · max |ref|` over the variable block.
pub fn pointwise_error_bins(
    reference: &SnapshotSet,
    approx: &SnapshotSet,
    variable: usize,
    thresholds: &[f64],
    floor: Option<f64>,
) -> Result<BinReport> {
    check_pair(reference, approx, variable)?;
    if thresholds.is_empty()
        || thresholds.iter().any(|t| !(t.is_finite() && *t >= 0.0))
        || thresholds.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::invalid("bin thresholds must be nonnegative and strictly increasing"));
    }
    let a = reference.variable_block(variable);
    let b = approx.variable_block(variable);
    let floor = match floor {
        Some(f) if f > 0.0 && f.is_finite() => f,
        Some(f) => return Err(Error::invalid(format!("error floor must be positive, got {f}"))),
        None => {
            let m = a.amax();
            if m > 0.0 {
                DEFAULT_FLOOR_FACTOR * m
            } else {
                f64::MIN_POSITIVE
            }
        }
    };
    let n_x = a.nrows() as f64;
    let fractions = (0..a.ncols())
        .into_par_iter()
        .map(|c| {
            let mut counts = vec![0usize; thresholds.len() + 1];
            for (r, x) in a.column(c).iter().zip(b.column(c).iter()) {
                let re = (x - r).abs() / r.abs().max(floor);
                counts[bin_index(thresholds, re)] += 1;
            }
            counts.into_iter().map(|n| n as f64 / n_x).collect()
        })
        .collect();
    Ok(BinReport {
        thresholds: thresholds.to_vec(),
        times: reference.time().timestamps().to_vec(),
        fractions,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub indices: Vec<usize>,
    /// Coordinate along the probe: `x` for 1D geometries, polar angle on
    /// annuli, cumulative distance otherwise.
    pub coordinate: Vec<f64>,
    /// `|probe| × n_t` values.
    pub values: DMatrix<f64>,
}

pub fn line_probe(set: &SnapshotSet, variable: usize, probe: &[usize]) -> Result<Profile> {
    if variable >= set.layout().n_vars() {
        return Err(Error::Index(format!("variable {variable} out of range")));
    }
    if probe.is_empty() {
        return Err(Error::Index("empty probe".into()));
    }
    let geom = set.geometry();
    check_index_list(probe, geom.n_points())?;
    let coordinate = match (geom.dim(), geom.angles()) {
        (1, _) => probe.iter().map(|&i| geom.point(i)[0]).collect(),
        (_, Some(angles)) => probe.iter().map(|&i| angles[i]).collect(),
        _ => {
            let mut s = 0.0;
            let mut out = vec![0.0];
            for w in probe.windows(2) {
                let (p, q) = (geom.point(w[0]), geom.point(w[1]));
                s += p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                out.push(s);
            }
            out
        }
    };
    let block = set.variable_block(variable);
    let values = DMatrix::from_fn(probe.len(), set.n_snapshots(), |i, c| block[(probe[i], c)]);
    Ok(Profile { indices: probe.to_vec(), coordinate, values })
}

/// Points of a periodic geometry whose radius is within `tolerance` of
/// `radius`, ordered by increasing angle.
pub fn circumferential_probe(set: &SnapshotSet, radius: f64, tolerance: f64) -> Result<Vec<usize>> {
    let geom = set.geometry();
    let angles = geom
        .angles()
        .ok_or_else(|| Error::invalid("circumferential probe needs a periodic geometry"))?;
    let mut idx: Vec<usize> = (0..geom.n_points())
        .filter(|&i| geom.dim() == 1 || (geom.radius(i) - radius).abs() <= tolerance)
        .collect();
    if idx.is_empty() {
        return Err(Error::invalid(format!("no points within {tolerance} of radius {radius}")));
    }
    idx.sort_by(|&a, &b| angles[a].total_cmp(&angles[b]).then(a.cmp(&b)));
    Ok(idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::{Geometry, StateLayout, TimeGrid};

    fn set(data: DMatrix<f64>, n_vars: usize, n_train: usize) -> SnapshotSet {
        let n_x = data.nrows() / n_vars;
        let names = (0..n_vars).map(|v| format!("v{v}")).collect();
        let layout = StateLayout::new(names, vec![String::new(); n_vars], n_x).unwrap();
        let n_t = data.ncols();
        SnapshotSet::new(
            layout,
            Geometry::uniform_interval(0.0, 1.0, n_x).unwrap(),
            TimeGrid::uniform(0.0, 0.1, n_t, n_train).unwrap(),
            data,
        )
        .unwrap()
    }

    fn sample() -> SnapshotSet {
        set(DMatrix::from_fn(12, 5, |i, j| 1.0 + (i * 7 + j * 3) as f64 * 0.1), 2, 3)
    }

    #[test]
    fn identical_sets_have_zero_error() {
        let a = sample();
        assert_eq!(squared_l2_relative_error(&a, &a, 1, 0..5).unwrap(), 0.0);
        let report = error_report(&a, &a).unwrap();
        assert_eq!(report.horizon_split, 3);
        assert!(report.per_variable.iter().all(|e| e.training_error == 0.0 && e.prediction_error == Some(0.0)));
    }

    #[test]
    fn uniform_scaling_gives_squared_deviation() {
        let a = sample();
        let b = a.with_data(a.data() * 1.1).unwrap();
        let e = squared_l2_relative_error(&a, &b, 0, 0..5).unwrap();
        assert!((e - 0.01).abs() <= 1e-14);
        for v in squared_l2_relative_error_per_column(&a, &b, 0, 1..4).unwrap() {
            assert!((v - 0.01).abs() <= 1e-14);
        }
    }

    #[test]
    fn zero_reference_and_bad_range_rejected() {
        let z = set(DMatrix::zeros(4, 3), 1, 3);
        assert!(squared_l2_relative_error(&z, &z, 0, 0..3).is_err());
        let a = sample();
        assert!(squared_l2_relative_error(&a, &a, 0, 2..2).is_err());
        assert!(squared_l2_relative_error(&a, &a, 0, 0..6).is_err());
        assert!(squared_l2_relative_error(&a, &a, 2, 0..1).is_err());
        assert!(squared_l2_relative_error(&a, &a.leading_columns(4).unwrap(), 0, 0..1).is_err());
    }

    #[test]
    fn bins_for_exact_and_uniform_errors() {
        let a = sample();
        let exact = pointwise_error_bins(&a, &a, 0, &DEFAULT_BIN_THRESHOLDS, None).unwrap();
        assert!(exact.fractions.iter().all(|f| f == &[1.0, 0.0, 0.0, 0.0]));
        let b = a.with_data(a.data() * 1.15).unwrap();
        let r = pointwise_error_bins(&a, &b, 1, &DEFAULT_BIN_THRESHOLDS, None).unwrap();
        assert!(r.fractions.iter().all(|f| f == &[0.0, 0.0, 1.0, 0.0]));
        assert_eq!(r.times.len(), 5);
    }

    #[test]
    fn bins_split_half_and_half() {
        let a = set(DMatrix::from_element(4, 2, 2.0), 1, 2);
        let mut d = a.data().clone();
        for c in 0..2 {
            d[(0, c)] = 2.02;
            d[(1, c)] = 1.98;
            d[(2, c)] = 2.5;
            d[(3, c)] = 1.5;
        }
        let r = pointwise_error_bins(&a, &a.with_data(d).unwrap(), 0, &DEFAULT_BIN_THRESHOLDS, None).unwrap();
        assert!(r.fractions.iter().all(|f| f == &[0.5, 0.0, 0.0, 0.5]));
    }

    #[test]
    fn bin_edges_are_closed_above() {
        let t = DEFAULT_BIN_THRESHOLDS;
        assert_eq!(bin_index(&t, 0.05), 0);
        assert_eq!(bin_index(&t, 0.0500001), 1);
        assert_eq!(bin_index(&t, 0.10), 1);
        assert_eq!(bin_index(&t, 0.20), 2);
        assert_eq!(bin_index(&t, 0.21), 3);
        assert!(pointwise_error_bins(&sample(), &sample(), 0, &[0.2, 0.1], None).is_err());
    }

    #[test]
    fn probes() {
        let a = sample();
        let all: Vec<usize> = (0..6).collect();
        let p = line_probe(&a, 1, &all).unwrap();
        assert_eq!(p.values, a.variable_block(1).into_owned());
        assert_eq!(p.coordinate[5], 1.0);
        let one = line_probe(&a, 0, &[2]).unwrap();
        assert_eq!(one.values.row(0).iter().copied().collect::<Vec<_>>(), (0..5).map(|k| a.value(0, 2, k)).collect::<Vec<_>>());
        assert!(line_probe(&a, 0, &[6]).is_err());
        assert!(line_probe(&a, 0, &[1, 1]).is_err());
    }

    #[test]
    fn annular_probe_sorted_by_angle() {
        let mut pts = Vec::new();
        for (ir, r) in [1.0, 1.5, 2.0].iter().enumerate() {
            for j in 0..16 {
                let th = (j * 7 % 16) as f64 * std::f64::consts::TAU / 16.0 + 0.01 * ir as f64;
                pts.push([r * th.cos(), r * th.sin()]);
            }
        }
        let geom = Geometry::annulus(&pts).unwrap();
        let layout = StateLayout::scalar("p", pts.len()).unwrap();
        let s = SnapshotSet::from_fn(layout, geom, TimeGrid::uniform(0.0, 1.0, 2, 2).unwrap(), |_, x, k| {
            (x + k) as f64
        })
        .unwrap();
        let probe = circumferential_probe(&s, 1.5, 1e-9).unwrap();
        assert_eq!(probe.len(), 16);
        let prof = line_probe(&s, 0, &probe).unwrap();
        assert!(prof.coordinate.windows(2).all(|w| w[0] < w[1]));
        assert!(probe.iter().all(|&i| (16..32).contains(&i)));
    }
}
