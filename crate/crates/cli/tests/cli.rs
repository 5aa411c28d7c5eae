use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn finsler(config: &Path, out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finsler"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("run finsler")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const SMALL: &str = r#"{
  "metric": {"family": "randers", "n": 2, "b": [0.3, 0.0]},
  "grids": {"directions": [16], "h": 0.02, "r_max": 0.6},
  "suite": [
    {"check": "riccati"},
    {"check": "laplacian_comparison", "p": 2},
    {"check": "bishop_gromov", "R": 0.6},
    {"check": "coarea", "t": 0.3, "eps": [0.08, 0.04, 0.02]}
  ],
  "output": {"dir": "out", "formats": ["csv", "json"]}
}"#;

#[test]
fn euclidean_suite_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "e.json",
        r#"{
  "metric": {"family": "euclidean", "n": 2},
  "measure": {"kind": "lebesgue"},
  "grids": {"directions": [16], "h": 0.01, "r_max": 1.0},
  "output": {"dir": "out", "formats": ["csv", "json"]}
}"#,
    );
    let out = tmp.path().join("out");
    let o = finsler(&cfg, &out, &["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "pass");
    assert_eq!(summary["exit_code"], 0);
    assert!(!summary["checks"].as_array().unwrap().is_empty());
}

#[test]
fn unmet_hypothesis_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "g.json",
        r#"{
  "metric": {"family": "euclidean", "n": 2},
  "measure": {"kind": "gaussian"},
  "base_points": [[0.3, 0.0]],
  "grids": {"directions": [16], "h": 0.02, "r_max": 1.0},
  "suite": [{"check": "laplacian_comparison", "p": 2, "k": 0, "theta": 0}]
}"#,
    );
    let o = finsler(&cfg, &tmp.path().join("out"), &["verify"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn zero_tangent_vector_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.json",
        r#"{
  "metric": {"family": "funk", "n": 2},
  "grids": {"h": 0.02, "r_max": 1.0},
  "points": [{"x": [0.1, 0.0], "y": [1.0, 0.0]}, {"x": [0.0, 0.0], "y": [0.0, 0.0]}]
}"#,
    );
    let o = finsler(&cfg, &tmp.path().join("out"), &["compute"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("points[1].y"));
}

#[test]
fn malformed_json_reports_location() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.json", "{\n  \"metric\": {\"family\": \"nope\", \"n\": 2}\n}");
    let o = finsler(&cfg, &tmp.path().join("out"), &["verify"]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("metric") && err.contains("line 2"), "{err}");
}

#[test]
fn compute_writes_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{
  "metric": {"family": "minkowski_quartic", "n": 3, "epsilon": 0.2},
  "grids": {"h": 0.05, "r_max": 1.0},
  "points": [{"x": [0.1, 0.2, 0.0], "y": [1.0, 0.5, -0.2]}]
}"#,
    );
    let out = tmp.path().join("out");
    let o = finsler(&cfg, &out, &["compute"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("compute.csv").exists());
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("compute.json")).unwrap()).unwrap();
    assert_eq!(v["points"].as_array().unwrap().len(), 1);
}

#[test]
fn catalog_lists_families() {
    let o = Command::new(env!("CARGO_BIN_EXE_finsler")).arg("catalog").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for family in ["euclidean", "poincare_ball", "stereographic_sphere", "minkowski_quartic", "randers", "funk"] {
        assert!(text.contains(family), "{family}");
    }
}

#[test]
fn plot_script_is_emitted() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.json", SMALL);
    let out = tmp.path().join("out");
    let o = finsler(&cfg, &out, &["verify", "--emit-plot-script"]);
    assert!(matches!(o.status.code(), Some(0 | 2)));
    let script = std::fs::read_to_string(out.join("plot.gp")).unwrap();
    assert!(script.contains("plot"));
}

#[test]
fn output_is_independent_of_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.json", SMALL);
    let read = |dir: &Path| {
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        files
    };
    let mut runs = Vec::new();
    for jobs in ["1", "3"] {
        let out = tmp.path().join(format!("out{jobs}"));
        let o = finsler(&cfg, &out, &["--jobs", jobs, "verify"]);
        assert!(matches!(o.status.code(), Some(0 | 2)));
        runs.push(read(&out));
    }
    assert_eq!(runs[0], runs[1]);
}
