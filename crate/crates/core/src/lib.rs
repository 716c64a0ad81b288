//! Operator Inference reduced-order models, single-domain and with overlapping
//! domain decomposition.
//!
//! The pipeline runs bottom-up through the modules:
//!
//! * [`snapshot`]: snapshot matrices, geometry, time grids and the SNAP file format.
//! * [`preprocess`]: per-variable transformation, centering and scaling.
//! * [`decomp`]: overlapping interval/sector decompositions and blending weights.
//! * [`pod`]: POD bases via thin SVD or the method of snapshots.
//! * [`opinf`]: regression of linear, quadratic and coupling operators.
//! * [`rom`]: the assembled coupled ROM, its time integration and the DDRM artifact.
//! * [`regsearch`]: grid search over regularization hyperparameters.
//! * [`metrics`]: error metrics and diagnostic extracts.
//! * [`fomlab`]: small full-order models used to generate training data.

pub mod decomp;
pub mod error;
pub mod fomlab;
mod io;
pub mod metrics;
pub mod opinf;
pub mod pod;
pub mod preprocess;
pub mod regsearch;
pub mod rom;
pub mod snapshot;

pub use decomp::{BlendingWeights, Decomposition, Topology};
pub use error::{Error, Result};
pub use opinf::{Regularization, RomForm, RomOperators};
pub use pod::PodBasis;
pub use preprocess::{ScalingKind, ScalingRecord, Transform};
pub use rom::CoupledRom;
pub use snapshot::{Geometry, SnapshotSet, StateLayout, TimeGrid};

pub use nalgebra::{DMatrix, DVector};
