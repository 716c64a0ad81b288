//! Pipeline configuration, stored as TOML.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use ddrom_core::fomlab::{FomKind, FomSpec};
use ddrom_core::opinf::FdScheme;
use ddrom_core::pod::{PodAlgorithm, DEFAULT_GRAM_BLOCK};
use ddrom_core::regsearch::{log_spaced, SearchMode, DEFAULT_BOUND_FACTOR, DEFAULT_MAX_SUBDOMAINS};
use ddrom_core::{RomForm, ScalingKind, Transform};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub paths: PathsConfig,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    #[serde(default)]
    pub decomposition: DecompositionConfig,
    #[serde(default)]
    pub pod: PodConfig,
    #[serde(default)]
    pub opinf: OpinfConfig,
    #[serde(default)]
    pub regsearch: RegsearchConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fom: Option<FomConfig>,
}

/// Input locations. Relative paths resolve against the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub artifact: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction: Option<PathBuf>,
    /// Reference for `evaluate`; defaults to the snapshots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<PathBuf>,
    /// First column seeds `predict`; defaults to the first snapshot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_condition: Option<PathBuf>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            output_dir: default_output_dir(),
            snapshots: None,
            artifact: None,
            prediction: None,
            truth: None,
            initial_condition: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingName {
    MaxAbs,
    StdDev,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformName {
    Identity,
    Reciprocal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessConfig {
    #[serde(default = "default_scaling")]
    pub scaling: ScalingName,
    /// One entry per variable; empty means identity everywhere.
    #[serde(default)]
    pub transforms: Vec<TransformName>,
    /// Overrides the training count stored in the snapshot file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_train: Option<usize>,
}

fn default_scaling() -> ScalingName {
    ScalingName::MaxAbs
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self { scaling: default_scaling(), transforms: Vec::new(), n_train: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyName {
    Single,
    Interval,
    Annular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionConfig {
    #[serde(default = "default_topology")]
    pub topology: TopologyName,
    #[serde(default = "default_k")]
    pub k: usize,
    /// Overlap width for intervals, overlap angle (radians) for sectors.
    #[serde(default)]
    pub overlap: f64,
}

fn default_topology() -> TopologyName {
    TopologyName::Single
}

fn default_k() -> usize {
    1
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        Self { topology: default_topology(), k: default_k(), overlap: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PodAlgorithmName {
    Svd,
    Snapshots,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PodConfig {
    /// Fixed reduced dimension for every subdomain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    /// Retained-energy target used when `r` is absent.
    #[serde(default = "default_energy")]
    pub energy: f64,
    /// Upper bound applied to energy-selected dimensions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<usize>,
    #[serde(default = "default_pod_algorithm")]
    pub algorithm: PodAlgorithmName,
    #[serde(default = "default_gram_block")]
    pub gram_block: usize,
}

fn default_energy() -> f64 {
    0.999
}

fn default_pod_algorithm() -> PodAlgorithmName {
    PodAlgorithmName::Svd
}

fn default_gram_block() -> usize {
    DEFAULT_GRAM_BLOCK
}

impl Default for PodConfig {
    fn default() -> Self {
        Self { r: None, energy: default_energy(), r_max: None, algorithm: default_pod_algorithm(), gram_block: default_gram_block() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormName {
    Continuous,
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeName {
    Order2,
    Order4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpinfConfig {
    #[serde(default = "default_form")]
    pub form: FormName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_linear: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_quadratic: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_linear: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_quadratic: Option<Vec<f64>>,
    #[serde(default = "default_derivative")]
    pub derivative: DerivativeName,
    /// Adds a constant column to the regression.
    #[serde(default)]
    pub constant: bool,
}

fn default_form() -> FormName {
    FormName::Discrete
}

fn default_derivative() -> DerivativeName {
    DerivativeName::Order4
}

impl Default for OpinfConfig {
    fn default() -> Self {
        Self {
            form: default_form(),
            lambda_linear: None,
            lambda_quadratic: None,
            grid_linear: None,
            grid_quadratic: None,
            derivative: default_derivative(),
            constant: false,
        }
    }
}

/// How the regularization is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaChoice {
    Fixed { linear: f64, quadratic: f64 },
    Grid { linear: Vec<f64>, quadratic: Vec<f64> },
}

impl OpinfConfig {
    /// Fixed values, an explicit grid, or (when neither is given) the default log grid.
    pub fn lambda_choice(&self) -> anyhow::Result<LambdaChoice> {
        let fixed = self.lambda_linear.is_some() || self.lambda_quadratic.is_some();
        let grid = self.grid_linear.is_some() || self.grid_quadratic.is_some();
        match (fixed, grid) {
            (true, true) => bail!("[opinf] sets both fixed lambdas and a lambda grid; choose one"),
            (true, false) => match (self.lambda_linear, self.lambda_quadratic) {
                (Some(linear), Some(quadratic)) => Ok(LambdaChoice::Fixed { linear, quadratic }),
                _ => bail!("[opinf] fixed regularization needs both lambda_linear and lambda_quadratic"),
            },
            (false, _) => {
                let default = || log_spaced(1e-6, 1e4, 11);
                Ok(LambdaChoice::Grid {
                    linear: self.grid_linear.clone().unwrap_or_else(default),
                    quadratic: self.grid_quadratic.clone().unwrap_or_else(default),
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Global,
    PerSubdomain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegsearchConfig {
    #[serde(default = "default_mode")]
    pub mode: ModeName,
    #[serde(default = "default_bound_factor")]
    pub bound_factor: f64,
    /// Rollout length per candidate; defaults to the training window plus 30%.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_reg_steps: Option<usize>,
    #[serde(default = "default_max_subdomains")]
    pub max_subdomains: usize,
}

fn default_mode() -> ModeName {
    ModeName::Global
}

fn default_bound_factor() -> f64 {
    DEFAULT_BOUND_FACTOR
}

fn default_max_subdomains() -> usize {
    DEFAULT_MAX_SUBDOMAINS
}

impl Default for RegsearchConfig {
    fn default() -> Self {
        Self {
            mode: default_mode(),
            bound_factor: default_bound_factor(),
            t_reg_steps: None,
            max_subdomains: default_max_subdomains(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    /// Spatial index lists, one profile CSV per probe and variable.
    #[serde(default)]
    pub probes: Vec<Vec<usize>>,
    /// Radii of circumferential probes on annular geometries.
    #[serde(default)]
    pub probe_radii: Vec<f64>,
    #[serde(default = "default_radius_tolerance")]
    pub radius_tolerance: f64,
    /// Snapshot indices written as profile columns; empty selects the first and last.
    #[serde(default)]
    pub probe_instants: Vec<usize>,
}

fn default_thresholds() -> Vec<f64> {
    ddrom_core::metrics::DEFAULT_BIN_THRESHOLDS.to_vec()
}

fn default_radius_tolerance() -> f64 {
    1e-6
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            thresholds: default_thresholds(),
            floor: None,
            probes: Vec::new(),
            probe_radii: Vec::new(),
            radius_tolerance: default_radius_tolerance(),
            probe_instants: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FomKindName {
    Burgers,
    RotatingPulse,
    DampedSine,
}

/// Flat description of a full-order model run; unused parameters are ignored by other kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FomConfig {
    pub kind: FomKindName,
    #[serde(default = "default_n_x")]
    pub n_x: usize,
    #[serde(default = "default_length")]
    pub length: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periodic: Option<bool>,
    pub dt: f64,
    pub steps: usize,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_train: Option<usize>,
    #[serde(default)]
    pub t0: f64,
    #[serde(default)]
    pub noise: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_one")]
    pub amplitude: f64,
    #[serde(default)]
    pub offset: f64,
    #[serde(default = "default_mode_number")]
    pub mode: u32,
    #[serde(default = "default_one")]
    pub speed: f64,
    #[serde(default = "default_waves")]
    pub waves: u32,
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default = "default_decay")]
    pub decay: f64,
    #[serde(default = "default_frequency")]
    pub frequency: f64,
}

fn default_n_x() -> usize {
    256
}
fn default_length() -> f64 {
    1.0
}
fn default_stride() -> usize {
    1
}
fn default_nu() -> f64 {
    0.01
}
fn default_one() -> f64 {
    1.0
}
fn default_mode_number() -> u32 {
    1
}
fn default_waves() -> u32 {
    2
}
fn default_width() -> f64 {
    0.05
}
fn default_decay() -> f64 {
    3.0
}
fn default_frequency() -> f64 {
    20.0
}

impl FomConfig {
    pub fn to_spec(&self, seed: u64) -> FomSpec {
        let kind = match self.kind {
            FomKindName::Burgers => FomKind::Burgers {
                nu: self.nu,
                amplitude: self.amplitude,
                offset: self.offset,
                mode: self.mode,
            },
            FomKindName::RotatingPulse => FomKind::RotatingPulse {
                speed: self.speed,
                waves: self.waves,
                width: self.width,
            },
            FomKindName::DampedSine => FomKind::DampedSine { decay: self.decay, frequency: self.frequency },
        };
        let mut spec = FomSpec::new(kind, self.n_x, self.length, self.dt, self.steps);
        if let Some(p) = self.periodic {
            spec.periodic = p;
        }
        spec.stride = self.stride;
        spec.n_train = self.n_train;
        spec.t0 = self.t0;
        spec.noise = self.noise;
        spec.seed = seed;
        spec
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = toml::from_str(text).context("parsing configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = Self::parse(&text).with_context(|| format!("in config {}", path.display()))?;
        if cfg.paths.output_dir.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.paths.output_dir = dir.join(&cfg.paths.output_dir);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.opinf.lambda_choice()?;
        let e = self.pod.energy;
        if !(e > 0.0 && e <= 1.0) {
            bail!("[pod] energy must lie in (0, 1], got {e}");
        }
        if self.pod.r == Some(0) {
            bail!("[pod] r must be at least 1");
        }
        if self.decomposition.k == 0 {
            bail!("[decomposition] k must be at least 1");
        }
        if self.decomposition.topology == TopologyName::Single && self.decomposition.k != 1 {
            bail!("[decomposition] topology \"single\" requires k = 1");
        }
        Ok(())
    }

    fn resolve(&self, p: &Option<PathBuf>, default: &str) -> PathBuf {
        match p {
            Some(p) if p.is_absolute() => p.clone(),
            Some(p) => self.paths.output_dir.join(p),
            None => self.paths.output_dir.join(default),
        }
    }

    pub fn snapshots_path(&self) -> PathBuf {
        self.resolve(&self.paths.snapshots, "snapshots.snap")
    }

    pub fn artifact_path(&self) -> PathBuf {
        self.resolve(&self.paths.artifact, "model.ddrm")
    }

    pub fn prediction_path(&self) -> PathBuf {
        self.resolve(&self.paths.prediction, "prediction.snap")
    }

    pub fn truth_path(&self) -> PathBuf {
        match &self.paths.truth {
            Some(_) => self.resolve(&self.paths.truth, ""),
            None => self.snapshots_path(),
        }
    }

    pub fn initial_condition_path(&self) -> Option<PathBuf> {
        self.paths.initial_condition.as_ref().map(|_| self.resolve(&self.paths.initial_condition, ""))
    }

    pub fn scaling_kind(&self) -> ScalingKind {
        match self.preprocess.scaling {
            ScalingName::MaxAbs => ScalingKind::MaxAbs,
            ScalingName::StdDev => ScalingKind::StdDev,
        }
    }

    pub fn transforms(&self, n_vars: usize) -> anyhow::Result<Vec<Transform>> {
        let t = &self.preprocess.transforms;
        if t.is_empty() {
            return Ok(vec![Transform::Identity; n_vars]);
        }
        if t.len() != n_vars {
            bail!("[preprocess] lists {} transforms for {n_vars} variables", t.len());
        }
        Ok(t.iter()
            .map(|t| match t {
                TransformName::Identity => Transform::Identity,
                TransformName::Reciprocal => Transform::Reciprocal,
            })
            .collect())
    }

    pub fn form(&self) -> RomForm {
        match self.opinf.form {
            FormName::Continuous => RomForm::Continuous,
            FormName::Discrete => RomForm::Discrete,
        }
    }

    pub fn fd_scheme(&self) -> FdScheme {
        match self.opinf.derivative {
            DerivativeName::Order2 => FdScheme::Order2,
            DerivativeName::Order4 => FdScheme::Order4,
        }
    }

    pub fn pod_algorithm(&self) -> PodAlgorithm {
        match self.pod.algorithm {
            PodAlgorithmName::Svd => PodAlgorithm::ThinSvd,
            PodAlgorithmName::Snapshots => PodAlgorithm::MethodOfSnapshots { block: self.pod.gram_block },
        }
    }

    pub fn search_mode(&self) -> SearchMode {
        match self.regsearch.mode {
            ModeName::Global => SearchMode::Global,
            ModeName::PerSubdomain => SearchMode::PerSubdomain,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 7

[paths]
output_dir = "/tmp/run"
snapshots = "pulse.snap"

[decomposition]
topology = "annular"
k = 4
overlap = 0.0245

[pod]
r = 10

[opinf]
form = "discrete"
grid_linear = [1e-6, 1e-3, 1.0]
grid_quadratic = [1e-6, 1e-3, 1.0]

[regsearch]
mode = "global"
bound_factor = 1.5

[fom]
kind = "rotating_pulse"
n_x = 512
dt = 0.02
steps = 200
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = PipelineConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.decomposition.topology, TopologyName::Annular);
        assert_eq!(cfg.snapshots_path(), PathBuf::from("/tmp/run/pulse.snap"));
        assert_eq!(cfg.artifact_path(), PathBuf::from("/tmp/run/model.ddrm"));
        assert!(matches!(cfg.opinf.lambda_choice().unwrap(), LambdaChoice::Grid { .. }));
        let text = cfg.to_toml().unwrap();
        assert_eq!(PipelineConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn default_round_trips() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::parse(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn rejects_both_lambda_styles() {
        let text = "[opinf]\nlambda_linear = 1.0\nlambda_quadratic = 1.0\ngrid_linear = [1.0]\n";
        assert!(PipelineConfig::parse(text).is_err());
        assert!(PipelineConfig::parse("[opinf]\nlambda_linear = 1.0\n").is_err());
        let fixed = PipelineConfig::parse("[opinf]\nlambda_linear = 1.0\nlambda_quadratic = 2.0\n").unwrap();
        assert_eq!(fixed.opinf.lambda_choice().unwrap(), LambdaChoice::Fixed { linear: 1.0, quadratic: 2.0 });
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(PipelineConfig::parse("[pod]\nrank = 3\n").is_err());
        assert!(PipelineConfig::parse("[decomposition]\nk = 3\n").is_err());
    }
}
