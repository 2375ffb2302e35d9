use std::fs;
use std::process::{Command, Output};

fn annni(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_annni"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn diagnose_csv_rows_per_seed() {
    let o = annni(&[
        "diagnose",
        "--j1",
        "1",
        "--j2",
        "-1",
        "--temperature",
        "1",
        "--seeds",
        "1,2,3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("grid_i,grid_j,j1,j2,temperature,a,b,phase,cycle_period"));
    assert!(lines[1..].iter().all(|l| l.contains(",commensurate,4,")));
}

#[test]
fn diagnose_json_reports_solvers() {
    let o = annni(&[
        "diagnose",
        "--j1",
        "1",
        "--j2",
        "0.9",
        "--temperature",
        "1",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rec = &doc["records"][0];
    let tc = rec["critical_temperature"].as_f64().unwrap();
    assert!((tc - 1.8 / 3f64.ln()).abs() < 1e-12);
    assert_eq!(rec["low_temperature"], true);
    assert!(rec["ferromagnetic"]["candidates"].as_array().unwrap().len() >= 2);
    assert_eq!(doc["metadata"]["tool"], "annni");
}

#[test]
fn scan_output_is_worker_independent() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for workers in ["1", "4"] {
        let path = dir.path().join(format!("scan{workers}.csv"));
        let o = annni(&[
            "scan",
            "--axis",
            "j2:-1:0.5:4",
            "--axis",
            "temperature:0.5:2:3",
            "--seeds",
            "0,9",
            "--workers",
            workers,
            "--output",
            path.to_str().unwrap(),
        ]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        outputs.push(fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(
        String::from_utf8(outputs[0].clone())
            .unwrap()
            .lines()
            .count(),
        1 + 4 * 3 * 2
    );
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.json");
    fs::write(
        &cfg,
        r#"{"axes": ["temperature:1:2:2"], "j1": 0.0, "seeds": [4], "iteration": {"max_iter": 500}}"#,
    )
    .unwrap();
    let o = annni(&[
        "scan",
        "--axis",
        "j1:0:1:5",
        "--j1",
        "3",
        "--format",
        "json",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let records = doc["records"].as_array().unwrap();
    assert_eq!(records.len(), 2);
    assert!(records.iter().all(|r| r["j1"] == 0.0 && r["seed"] == 4));
    assert_eq!(doc["metadata"]["config"]["iteration"]["max_iter"], 500);
    assert_eq!(doc["metadata"]["config"]["format"], "json");
}

#[test]
fn curves_table() {
    let o = annni(&[
        "curves",
        "--j2-min",
        "-1",
        "--j2-max",
        "-0.5",
        "--steps",
        "3",
        "--temperature",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 4);
    let empty = annni(&[
        "curves",
        "--j2-min",
        "-0.5",
        "--j2-max",
        "-0.1",
        "--steps",
        "4",
        "--temperature",
        "1",
    ]);
    assert_eq!(stdout(&empty).lines().count(), 1);
}

#[test]
fn partition_matches_enumeration() {
    let o = annni(&[
        "partition",
        "--j1",
        "0.7",
        "--j2",
        "-0.4",
        "--temperature",
        "1.3",
        "--depth",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rec = &doc["records"][0];
    let (z, e) = (
        rec["z"].as_f64().unwrap(),
        rec["z_enumerated"].as_f64().unwrap(),
    );
    assert!((z - e).abs() <= 1e-10 * e);
    let deep = annni(&[
        "partition",
        "--j1",
        "1",
        "--j2",
        "1",
        "--temperature",
        "1",
        "--depth",
        "2000",
    ]);
    assert_eq!(deep.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&deep.stdout).unwrap();
    assert!(doc["records"][0]["z"].is_null());
    assert!(doc["records"][0]["free_energy_density"]
        .as_f64()
        .unwrap()
        .is_finite());
}

#[test]
fn exit_codes() {
    assert_eq!(annni(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(annni(&["scan"]).status.code(), Some(1));
    assert_eq!(
        annni(&["scan", "--axis", "j1:1:0:3"]).status.code(),
        Some(1)
    );
    assert_eq!(
        annni(&["diagnose", "--temperature", "1e-5"]).status.code(),
        Some(2)
    );
    let o = annni(&[
        "scan",
        "--axis",
        "j1:0:1:2",
        "--output",
        "/nonexistent/dir/out.csv",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(annni(&["--help"]).status.code(), Some(0));
}

#[test]
fn verify_passes() {
    let o = annni(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 12);
    assert!(text.lines().all(|l| l.starts_with("[PASS]")));
}
