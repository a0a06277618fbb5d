use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use state_retrieval::stochastic::StochasticMatrix;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_state-retrieval"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn matrix(v: &Value) -> Vec<Vec<f64>> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|r| r.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect())
        .collect()
}

const SYMMETRIC: &str = r#"{"phi": [[0.75, 0.25], [0.25, 0.75]], "pi": [0.5, 0.5], "seed": 11}"#;

#[test]
fn optimal_writes_identity_for_symmetric_channel() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "ex.json", SYMMETRIC);
    let out = dir.path().join("result.json");
    let o = run(&["optimal", "--instance", &inst, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_file(&out);
    assert_eq!(v["convention"], "left-stochastic, entry[i][j]=P(i|j)");
    let map = matrix(&v["map"]);
    for (i, row) in map.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            assert!((x - if i == j { 1.0 } else { 0.0 }).abs() < 1e-9);
        }
    }
    assert!((v["determinant"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert!((v["bayes_determinant"].as_f64().unwrap() - 0.25).abs() < 1e-9);
}

#[test]
fn emitted_matrices_reread() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "ex.json", r#"{"phi": [[0.9, 0.2, 0.1], [0.05, 0.7, 0.3], [0.05, 0.1, 0.6]], "pi": [0.2, 0.3, 0.5]}"#);
    for cmd in ["bayes", "optimal"] {
        let out = dir.path().join(format!("{cmd}.json"));
        assert!(run(&[cmd, "--instance", &inst, "--out", out.to_str().unwrap()]).status.success());
        let v = json_file(&out);
        StochasticMatrix::from_rows(&matrix(&v["map"])).expect("emitted map is stochastic");
    }
    let out = dir.path().join("vertices.json");
    assert!(run(&["vertices", "--instance", &inst, "--out", out.to_str().unwrap()]).status.success());
    let v = json_file(&out);
    let vertices = v["vertices"].as_array().unwrap();
    assert_eq!(vertices.len(), v["vertex_count"].as_u64().unwrap() as usize);
    for vertex in vertices {
        let m = matrix(vertex);
        let total: f64 = m.iter().flatten().sum();
        assert!((total - 1.0).abs() < 1e-12 && m.iter().flatten().all(|&x| x >= 0.0));
    }
}

#[test]
fn involution_scan_three_state() {
    let o = run(&["involution-scan", "--pi", "0.1,0.2,0.7", "--sigma", "0.3,0.6,0.1"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["scan"]["vertex_count"], 10);
    assert_eq!(v["joint_off_diagonal"].as_array().unwrap().len(), 0);
    let joint = v["scan"]["joint_psd"].as_array().unwrap();
    for (i, row) in joint.iter().enumerate() {
        assert_eq!(row[i], true);
    }
}

#[test]
fn sweep_is_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "ex.json", r#"{"phi": [[0.8, 0.3], [0.2, 0.7]], "pi": [0.35, 0.65], "seed": 5}"#);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        assert!(run(&["sweep", "--instance", &inst, "--grid", "99", "--out", p.to_str().unwrap()]).status.success());
    }
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());
    let text = String::from_utf8(text).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("rho,D_bayes,D_optimal"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 99);
    assert!(rows.iter().all(|r| r[2] <= r[1] + 1e-8));
}

#[test]
fn seeded_commands_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "q.json", r#"{"case": "fig4", "compression": 0.5, "translation": 0.3, "seed": 4}"#);
    let a = run(&["quantum", "sweep", "--instance", &inst, "--grid", "3"]);
    let b = run(&["quantum", "sweep", "--instance", &inst, "--grid", "3"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn missing_seed_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "ex.json", r#"{"phi": [[0.8, 0.3], [0.2, 0.7]], "pi": [0.35, 0.65]}"#);
    let o = run(&["bounds", "--instance", &inst]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
    assert!(run(&["bounds", "--instance", &inst, "--seed", "1", "--samples", "500"]).status.success());
}

#[test]
fn invalid_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "bad.json", r#"{"phi": [[0.75, 0.35], [0.25, 0.75]], "pi": [0.5, 0.5]}"#);
    let o = run(&["bayes", "--instance", &inst]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("column 1"));

    let neg = write(dir.path(), "neg.json", r#"{"phi": [[1.2, 0.5], [-0.2, 0.5]], "pi": [0.5, 0.5]}"#);
    assert_eq!(run(&["bayes", "--instance", &neg]).status.code(), Some(1));
    let typo = write(dir.path(), "typo.json", r#"{"phy": [[1.0, 0.0], [0.0, 1.0]], "pi": [0.5, 0.5]}"#);
    assert_eq!(run(&["bayes", "--instance", &typo]).status.code(), Some(1));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn thermal_swap_case_study() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(
        dir.path(),
        "ts.json",
        r#"{"channel": "thermal-swap", "lambda1": 0.3, "lambda2": 0.6, "beta": 1.0, "epsilon": 1.0}"#,
    );
    let o = run(&["quantum", "case-study", "--instance", &inst]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["theorem"]["holds"], false);
    assert_eq!(v["retrieval"]["kind"], "swap");
    assert!(v["retrieval"]["composite_determinant"].as_f64().unwrap() > v["petz_composite_determinant"].as_f64().unwrap());
}

#[test]
fn depolarizing_petz_is_the_channel() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "dep.json", r#"{"channel": "depolarizing", "eta": 0.5, "d": 3}"#);
    let o = run(&["quantum", "case-study", "--instance", &inst]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["petz_equals_channel"], true);
    assert_eq!(v["theorem"]["holds"], true);
    assert_eq!(v["retrieval"]["kind"], "identity");
}
