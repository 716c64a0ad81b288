//! Variable transformation, centering and scaling.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::snapshot::SnapshotSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Identity,
    Reciprocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingKind {
    MaxAbs,
    StdDev,
}

/// Everything needed to map between original and scaled coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRecord {
    pub mean_field: DVector<f64>,
    pub scale: Vec<f64>,
    pub kind: ScalingKind,
    pub transforms: Vec<Transform>,
}

pub fn transform_variables(set: &SnapshotSet, spec: &[Transform]) -> Result<SnapshotSet> {
    let layout = set.layout();
    if spec.len() != layout.n_vars() {
        return Err(Error::dim(format!(
            "{} transforms for {} variables",
            spec.len(),
            layout.n_vars()
        )));
    }
    let n_x = layout.n_points();
    let mut data = set.data().clone();
    for (v, t) in spec.iter().enumerate() {
        if *t == Transform::Reciprocal {
            let mut block = data.rows_mut(v * n_x, n_x);
            if block.iter().any(|&x| x == 0.0) {
                return Err(Error::ReciprocalOfZero(v));
            }
            block.apply(|x| *x = 1.0 / *x);
        }
    }
    set.with_data(data)
}

/// Centers around the mean of the first `train_count` columns and scales each
/// variable block by one factor.
pub fn center_scale(set: &SnapshotSet, kind: ScalingKind, train_count: usize) -> Result<(SnapshotSet, ScalingRecord)> {
    let n_t = set.n_snapshots();
    if train_count == 0 || train_count > n_t {
        return Err(Error::invalid(format!("training count {train_count} outside [1, {n_t}]")));
    }
    let layout = set.layout();
    let n_x = layout.n_points();
    let train = set.data().columns(0, train_count);
    let mean_field: DVector<f64> = train.column_mean();

    let mut centered = set.data().clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean_field;
    }

    let mut scale = Vec::with_capacity(layout.n_vars());
    for v in 0..layout.n_vars() {
        let block = centered.view((v * n_x, 0), (n_x, train_count));
        let s = match kind {
            ScalingKind::MaxAbs => block.iter().fold(0.0f64, |m, x| m.max(x.abs())),
            ScalingKind::StdDev => (block.iter().map(|x| x * x).sum::<f64>() / block.len() as f64).sqrt(),
        };
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::ZeroScale { variable: v, name: layout.names()[v].clone() });
        }
        scale.push(s);
    }
    for (v, s) in scale.iter().enumerate() {
        centered.rows_mut(v * n_x, n_x).apply(|x| *x /= s);
    }

    let record = ScalingRecord {
        mean_field,
        scale,
        kind,
        transforms: vec![Transform::Identity; layout.n_vars()],
    };
    Ok((set.with_data(centered)?, record))
}

/// Transform followed by centering and scaling; the returned record inverts both.
pub fn fit_preprocess(
    set: &SnapshotSet,
    transforms: &[Transform],
    kind: ScalingKind,
    train_count: usize,
) -> Result<(SnapshotSet, ScalingRecord)> {
    let transformed = transform_variables(set, transforms)?;
    let (scaled, mut record) = center_scale(&transformed, kind, train_count)?;
    record.transforms = transforms.to_vec();
    Ok((scaled, record))
}

pub fn unscale(scaled: &SnapshotSet, record: &ScalingRecord) -> Result<SnapshotSet> {
    let data = record.unscale_matrix(scaled.data())?;
    scaled.with_data(data)
}

impl ScalingRecord {
    pub fn n_vars(&self) -> usize {
        self.scale.len()
    }

    pub fn state_dim(&self) -> usize {
        self.mean_field.len()
    }

    pub fn n_points(&self) -> usize {
        self.mean_field.len() / self.scale.len().max(1)
    }

    fn check_rows(&self, rows: usize) -> Result<()> {
        if rows != self.state_dim() || !self.state_dim().is_multiple_of(self.n_vars().max(1)) {
            return Err(Error::dim(format!(
                "state has {rows} rows, scaling record expects {}",
                self.state_dim()
            )));
        }
        if self.transforms.len() != self.n_vars() {
            return Err(Error::dim("scaling record transform count differs from variable count"));
        }
        Ok(())
    }

    /// Applies transform, centering and scaling to states in original coordinates.
    pub fn apply_matrix(&self, states: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_rows(states.nrows())?;
        let n_x = self.n_points();
        let mut out = states.clone();
        for (v, t) in self.transforms.iter().enumerate() {
            let mut block = out.rows_mut(v * n_x, n_x);
            if *t == Transform::Reciprocal {
                if block.iter().any(|&x| x == 0.0) {
                    return Err(Error::ReciprocalOfZero(v));
                }
                block.apply(|x| *x = 1.0 / *x);
            }
        }
        for mut col in out.column_iter_mut() {
            col -= &self.mean_field;
        }
        for (v, s) in self.scale.iter().enumerate() {
            out.rows_mut(v * n_x, n_x).apply(|x| *x /= s);
        }
        Ok(out)
    }

    pub fn apply_vector(&self, state: &DVector<f64>) -> Result<DVector<f64>> {
        let m = self.apply_matrix(&DMatrix::from_column_slice(state.len(), 1, state.as_slice()))?;
        Ok(m.column(0).into_owned())
    }

    /// Exact inverse of [`ScalingRecord::apply_matrix`].
    pub fn unscale_matrix(&self, scaled: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_rows(scaled.nrows())?;
        let n_x = self.n_points();
        let mut out = scaled.clone();
        for (v, s) in self.scale.iter().enumerate() {
            out.rows_mut(v * n_x, n_x).apply(|x| *x *= s);
        }
        for mut col in out.column_iter_mut() {
            col += &self.mean_field;
        }
        for (v, t) in self.transforms.iter().enumerate() {
            if *t == Transform::Reciprocal {
                out.rows_mut(v * n_x, n_x).apply(|x| *x = 1.0 / *x);
            }
        }
        Ok(out)
    }

    /// Rows of the record restricted to a subset of state rows.
    pub fn mean_rows(&self, rows: &[usize]) -> DVector<f64> {
        DVector::from_iterator(rows.len(), rows.iter().map(|&r| self.mean_field[r]))
    }
}
