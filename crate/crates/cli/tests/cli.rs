use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ddrom_core::{CoupledRom, SnapshotSet};
use tempfile::TempDir;

const PULSE: &str = r#"
seed = 5

[decomposition]
topology = "annular"
k = 4
overlap = 0.1

[pod]
r = 4

[opinf]
lambda_linear = 1e-6
lambda_quadratic = 1e-3

[fom]
kind = "rotating_pulse"
n_x = 128
dt = 0.02
steps = 60
n_train = 41
width = 0.1
"#;

fn ddrom(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddrom"))
        .args(args)
        .arg("--config")
        .arg(dir.join("run.toml"))
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = ddrom(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn setup(config: &str) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), config).unwrap();
    dir
}

fn out(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join("out").join(name)
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn gen_is_reproducible() {
    let config = PULSE.replace("width = 0.1", "width = 0.1\nnoise = 0.01");
    let a = setup(&config);
    let b = setup(&config);
    ok(a.path(), &["gen"]);
    ok(b.path(), &["gen"]);
    assert_eq!(fs::read(out(&a, "snapshots.snap")).unwrap(), fs::read(out(&b, "snapshots.snap")).unwrap());
    ok(b.path(), &["gen", "--seed", "6"]);
    assert_ne!(fs::read(out(&a, "snapshots.snap")).unwrap(), fs::read(out(&b, "snapshots.snap")).unwrap());
}

#[test]
fn cfl_violation_fails_loudly() {
    let dir = setup("[fom]\nkind = \"burgers\"\nn_x = 128\ndt = 0.01\nsteps = 10\n");
    let res = ddrom(dir.path(), &["gen"]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("CFL"));
}

#[test]
fn coupling_structure_follows_topology() {
    let dd = setup(PULSE);
    ok(dd.path(), &["gen"]);
    ok(dd.path(), &["train"]);
    let rom = CoupledRom::load(out(&dd, "model.ddrm")).unwrap();
    assert_eq!(rom.k(), 4);
    assert!(rom.operators.iter().all(|o| o.coupling.len() == 2));

    let sd = setup(&PULSE.replace("topology = \"annular\"\nk = 4", "topology = \"single\"\nk = 1"));
    ok(sd.path(), &["gen"]);
    ok(sd.path(), &["train"]);
    let rom = CoupledRom::load(out(&sd, "model.ddrm")).unwrap();
    assert_eq!(rom.k(), 1);
    assert!(rom.operators[0].coupling.is_empty());
}

#[test]
fn oversized_basis_reports_the_budget() {
    let dir = setup(&PULSE.replace("r = 4", "r = 12"));
    ok(dir.path(), &["gen"]);
    let res = ddrom(dir.path(), &["train"]);
    assert!(!res.status.success());
    let msg = String::from_utf8_lossy(&res.stderr);
    assert!(msg.contains("d(r)") && msg.contains("n_train"), "{msg}");
}

#[test]
fn prediction_length_follows_steps() {
    let dir = setup(PULSE);
    ok(dir.path(), &["gen"]);
    ok(dir.path(), &["train"]);
    for (steps, cols) in [("0", 1), ("7", 8)] {
        ok(dir.path(), &["predict", "--steps", steps]);
        assert_eq!(SnapshotSet::load(out(&dir, "prediction.snap")).unwrap().n_snapshots(), cols);
    }
    ok(dir.path(), &["predict"]);
    let first = fs::read(out(&dir, "prediction.snap")).unwrap();
    assert_eq!(SnapshotSet::load(out(&dir, "prediction.snap")).unwrap().n_snapshots(), 61);
    ok(dir.path(), &["predict"]);
    assert_eq!(fs::read(out(&dir, "prediction.snap")).unwrap(), first);
}

fn error_rows(dir: &TempDir) -> Vec<Vec<f64>> {
    fs::read_to_string(out(dir, "error_report.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').skip(1).map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn evaluate_reports_known_errors() {
    let config = format!("{PULSE}\n[paths]\nprediction = \"other.snap\"\n");
    let dir = setup(&config);
    ok(dir.path(), &["gen"]);
    let truth = SnapshotSet::load(out(&dir, "snapshots.snap")).unwrap();
    truth.save(out(&dir, "other.snap")).unwrap();
    ok(dir.path(), &["evaluate"]);
    assert_eq!(error_rows(&dir), vec![vec![0.0, 0.0]]);

    truth.with_data(truth.data() * 1.1).unwrap().save(out(&dir, "other.snap")).unwrap();
    ok(dir.path(), &["evaluate"]);
    for v in &error_rows(&dir)[0] {
        assert!((v - 0.01).abs() <= 1e-12, "{v}");
    }
}

#[test]
fn report_headers_are_stable() {
    let dir = setup(PULSE);
    for cmd in ["gen", "decompose", "svdreport", "train", "predict", "evaluate"] {
        ok(dir.path(), &[cmd]);
    }
    assert_eq!(header(&out(&dir, "error_report.csv")), "variable,training_error,prediction_error");
    assert_eq!(header(&out(&dir, "error_curve.csv")), "time,u");
    assert_eq!(header(&out(&dir, "bins_u.csv")), "time,le_0.05,le_0.1,le_0.2,gt_0.2");
    assert_eq!(header(&out(&dir, "svd_report.csv")), "subdomain,index,singular_value,cumulative_energy");
    assert_eq!(header(&out(&dir, "decomposition.csv")), "point,memberships,w_1,w_2,w_3,w_4");
    assert!(header(&out(&dir, "profile_u_0.csv")).starts_with("coordinate,truth_0,prediction_0"));
}
