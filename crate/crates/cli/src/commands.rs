//! The `ddrom` subcommands. Each reads its inputs from the configuration and
//! writes its outputs into the configured output directory.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use ddrom_core::fomlab::simulate;
use ddrom_core::metrics::{
    circumferential_probe, error_report, line_probe, pointwise_error_bins, squared_l2_relative_error_per_column,
    ErrorReport,
};
use ddrom_core::pod::cumulative_energy;
use ddrom_core::regsearch::{RegResult, SearchMode};
use ddrom_core::{CoupledRom, SnapshotSet};

use crate::config::{LambdaChoice, PipelineConfig};
use crate::pipeline::{build_decomposition, prepare, project, regsearch, subdomain_spectra, train};

pub const DECOMPOSITION_CSV: &str = "decomposition.csv";
pub const SUBDOMAINS_CSV: &str = "subdomains.csv";
pub const SVD_REPORT_CSV: &str = "svd_report.csv";
pub const TRAIN_REPORT_CSV: &str = "train_report.csv";
pub const REGSEARCH_CSV: &str = "regsearch.csv";
pub const ERROR_REPORT_CSV: &str = "error_report.csv";
pub const ERROR_CURVE_CSV: &str = "error_curve.csv";

pub const ERROR_REPORT_HEADER: [&str; 3] = ["variable", "training_error", "prediction_error"];
pub const SVD_REPORT_HEADER: [&str; 4] = ["subdomain", "index", "singular_value", "cumulative_energy"];

/// Options given on the command line rather than in the config.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub steps: Option<usize>,
}

/// Shortest round-trip decimal, switching to exponent form for very large or small magnitudes.
fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

fn output_dir(cfg: &PipelineConfig) -> Result<&Path> {
    let dir = cfg.paths.output_dir.as_path();
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    Ok(dir)
}

fn load_snapshots(path: &Path) -> Result<SnapshotSet> {
    SnapshotSet::load(path).with_context(|| format!("loading snapshots from {}", path.display()))
}

pub fn cmd_gen(cfg: &PipelineConfig) -> Result<PathBuf> {
    let fom = cfg.fom.as_ref().context("the gen command needs a [fom] section")?;
    let spec = fom.to_spec(cfg.seed);
    let set = simulate(&spec).context("simulating the full-order model")?;
    output_dir(cfg)?;
    let path = cfg.snapshots_path();
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    set.save(&path).with_context(|| format!("writing {}", path.display()))?;
    println!(
        "wrote {}: n_s = {}, n_x = {}, n_t = {}, n_train = {}",
        path.display(),
        set.layout().n_vars(),
        set.layout().n_points(),
        set.n_snapshots(),
        set.time().n_train()
    );
    Ok(path)
}

pub fn cmd_decompose(cfg: &PipelineConfig) -> Result<()> {
    let set = load_snapshots(&cfg.snapshots_path())?;
    let (dec, weights) = build_decomposition(cfg, &set)?;
    let dir = output_dir(cfg)?;
    let k = dec.k();
    let mut member = vec![Vec::new(); dec.n_points()];
    for i in 0..k {
        for &x in dec.dofs(i) {
            member[x].push(i.to_string());
        }
    }
    let mut w = csv_writer(&dir.join(DECOMPOSITION_CSV))?;
    let mut header = vec!["point".to_string(), "memberships".to_string()];
    header.extend((1..=k).map(|i| format!("w_{i}")));
    w.write_record(&header)?;
    for (x, m) in member.iter().enumerate() {
        let mut row = vec![x.to_string(), m.join(";")];
        row.extend(weights.weights.iter().map(|wi| num(wi[x])));
        w.write_record(&row)?;
    }
    w.flush()?;
    let mut s = csv_writer(&dir.join(SUBDOMAINS_CSV))?;
    s.write_record(["subdomain", "n_points", "interior_lo", "interior_hi", "neighbors"])?;
    for (i, sub) in dec.subdomains().iter().enumerate() {
        let nb: Vec<String> = sub.neighbors.iter().map(|j| j.to_string()).collect();
        s.write_record([
            i.to_string(),
            sub.dofs.len().to_string(),
            num(sub.interior.0),
            num(sub.interior.1),
            nb.join(";"),
        ])?;
        println!("subdomain {i}: {} points, neighbors [{}]", sub.dofs.len(), nb.join(", "));
    }
    s.flush()?;
    Ok(())
}

fn write_svd_report(path: &Path, spectra: &[Vec<f64>]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(SVD_REPORT_HEADER)?;
    for (i, sv) in spectra.iter().enumerate() {
        let cum = cumulative_energy(sv)?;
        for (j, (s, c)) in sv.iter().zip(&cum).enumerate() {
            w.write_record([i.to_string(), (j + 1).to_string(), num(*s), num(*c)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_svdreport(cfg: &PipelineConfig) -> Result<()> {
    let set = load_snapshots(&cfg.snapshots_path())?;
    let prep = prepare(cfg, &set)?;
    let spectra = subdomain_spectra(&prep)?;
    let dir = output_dir(cfg)?;
    write_svd_report(&dir.join(SVD_REPORT_CSV), &spectra)?;
    for (i, sv) in spectra.iter().enumerate() {
        println!("subdomain {i}: {} singular values, largest {}", sv.len(), sv.first().copied().unwrap_or(0.0));
    }
    Ok(())
}

fn write_regsearch(path: &Path, res: &RegResult, mode: SearchMode) -> Result<()> {
    let mut w = csv_writer(path)?;
    if mode == SearchMode::PerSubdomain {
        w.write_record(["trial", "subdomain", "lambda_linear", "lambda_quadratic", "training_error", "bounded"])?;
        for (n, t) in res.trials.iter().enumerate() {
            for (i, l) in t.lambdas.iter().enumerate() {
                w.write_record([
                    n.to_string(),
                    i.to_string(),
                    num(l.linear),
                    num(l.quadratic),
                    num(t.training_error),
                    t.bounded.to_string(),
                ])?;
            }
        }
    } else {
        w.write_record(["trial", "lambda_linear", "lambda_quadratic", "training_error", "bounded"])?;
        for (n, t) in res.trials.iter().enumerate() {
            w.write_record([
                n.to_string(),
                num(t.lambdas[0].linear),
                num(t.lambdas[0].quadratic),
                num(t.training_error),
                t.bounded.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_train(cfg: &PipelineConfig) -> Result<PathBuf> {
    let set = load_snapshots(&cfg.snapshots_path())?;
    let trained = train(cfg, &set)?;
    let dir = output_dir(cfg)?;
    let path = cfg.artifact_path();
    trained.rom.save(&path).with_context(|| format!("writing {}", path.display()))?;
    let mut w = csv_writer(&dir.join(TRAIN_REPORT_CSV))?;
    w.write_record([
        "subdomain",
        "n_points",
        "r",
        "coefficients",
        "rows",
        "retained_energy",
        "residual",
        "lambda_linear",
        "lambda_quadratic",
    ])?;
    for r in &trained.reports {
        w.write_record([
            r.subdomain.to_string(),
            r.n_points.to_string(),
            r.r.to_string(),
            r.coefficients.to_string(),
            r.rows.to_string(),
            num(r.retained_energy),
            num(r.residual),
            num(r.lambda.linear),
            num(r.lambda.quadratic),
        ])?;
        println!(
            "subdomain {}: r = {}, d(r) = {} of {} rows, energy = {:.6}, residual = {:e}, lambda = ({:e}, {:e})",
            r.subdomain, r.r, r.coefficients, r.rows, r.retained_energy, r.residual, r.lambda.linear, r.lambda.quadratic
        );
    }
    w.flush()?;
    if let Some(res) = &trained.search {
        write_regsearch(&dir.join(REGSEARCH_CSV), res, cfg.search_mode())?;
    }
    println!(
        "largest subdomain slice: {} bytes (full snapshot matrix {} bytes, factor {:.3})",
        trained.largest_subdomain_bytes,
        trained.full_bytes,
        trained.full_bytes as f64 / trained.largest_subdomain_bytes as f64
    );
    println!("wrote {}", path.display());
    Ok(path)
}

pub fn cmd_regsearch(cfg: &PipelineConfig) -> Result<()> {
    let (linear, quadratic) = match cfg.opinf.lambda_choice()? {
        LambdaChoice::Grid { linear, quadratic } => (linear, quadratic),
        LambdaChoice::Fixed { .. } => bail!("regsearch needs a lambda grid, but [opinf] fixes the lambdas"),
    };
    let set = load_snapshots(&cfg.snapshots_path())?;
    let prep = prepare(cfg, &set)?;
    let proj = project(cfg, &prep)?;
    let res = regsearch(cfg, &prep, &proj, linear, quadratic)?;
    let dir = output_dir(cfg)?;
    write_regsearch(&dir.join(REGSEARCH_CSV), &res, cfg.search_mode())?;
    for (i, l) in res.chosen.iter().enumerate() {
        println!("subdomain {i}: lambda = ({:e}, {:e})", l.linear, l.quadratic);
    }
    println!("training error {:e}, bounded = {}, {} trials", res.training_error, res.bounded, res.trials.len());
    Ok(())
}

pub fn cmd_predict(cfg: &PipelineConfig, opts: RunOptions) -> Result<PathBuf> {
    let artifact = cfg.artifact_path();
    let rom = CoupledRom::load(&artifact).with_context(|| format!("loading {}", artifact.display()))?;
    let (init, default_steps) = match cfg.initial_condition_path() {
        Some(p) => (load_snapshots(&p)?.data().column(0).into_owned(), None),
        None => {
            let s = load_snapshots(&cfg.snapshots_path())?;
            (s.data().column(0).into_owned(), Some(s.n_snapshots() - 1))
        }
    };
    let steps = opts
        .steps
        .or(default_steps)
        .context("--steps is required when predicting from a separate initial condition")?;
    let pred = rom.predict_full(&init, steps).context("integrating the reduced model")?;
    output_dir(cfg)?;
    let path = cfg.prediction_path();
    pred.save(&path).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}: {} snapshots", path.display(), pred.n_snapshots());
    Ok(path)
}

fn bin_header(thresholds: &[f64]) -> Vec<String> {
    let mut h = vec!["time".to_string()];
    h.extend(thresholds.iter().map(|t| format!("le_{t}")));
    h.push(format!("gt_{}", thresholds[thresholds.len() - 1]));
    h
}

pub fn write_error_report(path: &Path, report: &ErrorReport) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(ERROR_REPORT_HEADER)?;
    for e in &report.per_variable {
        w.write_record([e.name.clone(), num(e.training_error), e.prediction_error.map(num).unwrap_or_default()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_evaluate(cfg: &PipelineConfig) -> Result<()> {
    let truth = load_snapshots(&cfg.truth_path())?;
    let pred = load_snapshots(&cfg.prediction_path())?;
    if truth.layout().state_dim() != pred.layout().state_dim() || truth.layout().n_vars() != pred.layout().n_vars() {
        bail!(
            "dimension mismatch: truth has {} rows ({} variables), prediction has {} rows ({} variables)",
            truth.layout().state_dim(),
            truth.layout().n_vars(),
            pred.layout().state_dim(),
            pred.layout().n_vars()
        );
    }
    if pred.n_snapshots() > truth.n_snapshots() {
        bail!("prediction has {} snapshots, truth only {}", pred.n_snapshots(), truth.n_snapshots());
    }
    let truth = truth.leading_columns(pred.n_snapshots())?;
    let dir = output_dir(cfg)?;
    let report = error_report(&truth, &pred)?;
    write_error_report(&dir.join(ERROR_REPORT_CSV), &report)?;
    for e in &report.per_variable {
        match e.prediction_error {
            Some(p) => println!("{}: training error {:e}, prediction error {:e}", e.name, e.training_error, p),
            None => println!("{}: training error {:e}", e.name, e.training_error),
        }
    }

    let n_vars = truth.layout().n_vars();
    let n_t = truth.n_snapshots();
    let names = truth.layout().names();
    let curves = (0..n_vars)
        .map(|v| squared_l2_relative_error_per_column(&truth, &pred, v, 0..n_t))
        .collect::<ddrom_core::Result<Vec<_>>>()?;
    let mut w = csv_writer(&dir.join(ERROR_CURVE_CSV))?;
    let mut header = vec!["time".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for c in 0..n_t {
        let mut row = vec![num(truth.time().timestamps()[c])];
        row.extend(curves.iter().map(|e| num(e[c])));
        w.write_record(&row)?;
    }
    w.flush()?;

    let m = &cfg.metrics;
    for v in 0..n_vars {
        let bins = pointwise_error_bins(&truth, &pred, v, &m.thresholds, m.floor)?;
        let mut w = csv_writer(&dir.join(format!("bins_{}.csv", names[v])))?;
        w.write_record(bin_header(&m.thresholds))?;
        for (t, f) in bins.times.iter().zip(&bins.fractions) {
            let mut row = vec![num(*t)];
            row.extend(f.iter().map(|x| num(*x)));
            w.write_record(&row)?;
        }
        w.flush()?;
    }

    let mut probes = m.probes.clone();
    for &r in &m.probe_radii {
        probes.push(circumferential_probe(&truth, r, m.radius_tolerance)?);
    }
    if probes.is_empty() && truth.geometry().dim() == 1 {
        probes.push((0..truth.geometry().n_points()).collect());
    }
    let instants = if m.probe_instants.is_empty() {
        if n_t > 1 {
            vec![0, n_t - 1]
        } else {
            vec![0]
        }
    } else {
        m.probe_instants.clone()
    };
    if let Some(&bad) = instants.iter().find(|&&k| k >= n_t) {
        bail!("probe instant {bad} beyond the {n_t} evaluated snapshots");
    }
    for (p, probe) in probes.iter().enumerate() {
        for v in 0..n_vars {
            let t = line_probe(&truth, v, probe)?;
            let a = line_probe(&pred, v, probe)?;
            let mut w = csv_writer(&dir.join(format!("profile_{}_{p}.csv", names[v])))?;
            let mut header = vec!["coordinate".to_string()];
            for &k in &instants {
                header.push(format!("truth_{k}"));
                header.push(format!("prediction_{k}"));
            }
            w.write_record(&header)?;
            for (i, x) in t.coordinate.iter().enumerate() {
                let mut row = vec![num(*x)];
                for &k in &instants {
                    row.push(num(t.values[(i, k)]));
                    row.push(num(a.values[(i, k)]));
                }
                w.write_record(&row)?;
            }
            w.flush()?;
        }
    }

    let artifact = cfg.artifact_path();
    if artifact.exists() {
        let rom = CoupledRom::load(&artifact).with_context(|| format!("loading {}", artifact.display()))?;
        let spectra: Vec<Vec<f64>> = rom.bases.iter().map(|b| b.singular_values.clone()).collect();
        write_svd_report(&dir.join(SVD_REPORT_CSV), &spectra)?;
    }
    Ok(())
}
