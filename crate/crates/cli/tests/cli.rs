use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn a3gcn(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_a3gcn"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(o: Output) -> Output {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    o
}

const SMALL_SPEC: &str = r#"{"num_nodes": 120, "num_classes": 3, "p_intra": 0.1, "p_inter": 0.01,
    "feature_dim": 8, "feature_noise": 1.0, "train_per_class": 5, "val_size": 20}"#;

fn small_config(dir: &Path) {
    fs::write(
        dir.join("exp.json"),
        format!(r#"{{"dataset": {{"sbm": {SMALL_SPEC}}}, "k": 3, "max_epochs": 8, "trials": 2}}"#),
    )
    .unwrap();
}

#[test]
fn gen_validate_and_inject() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("spec.json"), SMALL_SPEC).unwrap();
    let gen = ok(a3gcn(&["gen-sbm", "spec.json", "bundle", "--seed", "3"], dir.path()));
    let shape = stdout(&gen);
    assert!(shape.starts_with("nodes=120 "), "{shape}");

    let val = ok(a3gcn(&["validate", "bundle"], dir.path()));
    assert_eq!(stdout(&val), shape);

    let noisy = ok(a3gcn(&["inject-noise", "bundle", "0", "clean"], dir.path()));
    assert!(stdout(&noisy).trim_end().ends_with("inter-class=0"));
    ok(a3gcn(&["validate", "clean"], dir.path()));
}

#[test]
fn validate_reports_named_errors() {
    let dir = tempfile::tempdir().unwrap();
    ok(a3gcn(&["gen-sbm", "fixture", "bundle"], dir.path()));
    fs::write(dir.path().join("bundle/labels.csv"), "0\n").unwrap();
    let o = a3gcn(&["validate", "bundle"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("dimension mismatch"));

    let missing = a3gcn(&["validate", "nowhere"], dir.path());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("missing bundle file"));
}

#[test]
fn run_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    small_config(dir.path());
    let first = ok(a3gcn(&["run", "exp.json", "--seed", "5", "--out", "a"], dir.path()));
    assert!(stdout(&first).starts_with("a3: test accuracy"));
    ok(a3gcn(&["run", "exp.json", "--seed", "5", "--out", "b"], dir.path()));
    for f in ["summary.json", "trials/trial-000.csv", "trials/trial-001.csv"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(f)).unwrap(),
            fs::read(dir.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
    ok(a3gcn(&["run", "exp.json", "--seed", "6", "--out", "c"], dir.path()));
    assert_ne!(
        fs::read(dir.path().join("a/summary.json")).unwrap(),
        fs::read(dir.path().join("c/summary.json")).unwrap()
    );
    let summary = fs::read_to_string(dir.path().join("a/summary.json")).unwrap();
    assert!(summary.contains("\"master_seed\": 5"));
}

#[test]
fn sweep_grid_rows() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("sweep.json"),
        format!(
            r#"{{"dataset": {{"sbm": {SMALL_SPEC}}}, "max_epochs": 3, "trials": 1,
                "sweep": {{"k": [1, 3, 5], "alpha": [0.0, 0.1]}}}}"#
        ),
    )
    .unwrap();
    let o = ok(a3gcn(&["sweep", "sweep.json", "--out", "s"], dir.path()));
    assert!(stdout(&o).contains("6 grid points"));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("s/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["points"].as_array().unwrap().len(), 6);

    let fig = ok(a3gcn(&["figure", "fig7", "s"], dir.path()));
    assert_eq!(stdout(&fig).lines().count(), 7);
    let missing = a3gcn(&["figure", "fig8", "s"], dir.path());
    assert!(!missing.status.success());

    // A sweep config is rejected by `run`.
    assert!(!a3gcn(&["run", "sweep.json"], dir.path()).status.success());
}

#[test]
fn figures_and_embeddings_from_a_run() {
    let dir = tempfile::tempdir().unwrap();
    small_config(dir.path());
    ok(a3gcn(&["run", "exp.json", "--out", "r"], dir.path()));
    ok(a3gcn(&["figure", "fig6", "r", "--out", "theta.csv"], dir.path()));
    let theta = fs::read_to_string(dir.path().join("theta.csv")).unwrap();
    assert_eq!(theta.lines().count(), 9);
    assert!(theta.starts_with("series,epoch,theta\n"));

    ok(a3gcn(&["export-embeddings", "exp.json", "4", "emb/e.csv"], dir.path()));
    let emb = fs::read_to_string(dir.path().join("emb/e.csv")).unwrap();
    assert_eq!(emb.lines().count(), 121);
    assert!(emb.starts_with("node,label,high_confidence,agreed,h0,"));
}

#[test]
fn usage_and_config_errors_fail() {
    let dir = tempfile::tempdir().unwrap();
    small_config(dir.path());
    assert!(!a3gcn(&["bogus"], dir.path()).status.success());
    assert!(!a3gcn(&["run", "exp.json", "--bogus"], dir.path()).status.success());
    let o = a3gcn(&["run", "exp.json", "--beta", "2"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("`beta`"));
}
