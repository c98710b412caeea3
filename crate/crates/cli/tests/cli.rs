use std::path::Path;
use std::process::{Command, Output};

fn specquant(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specquant")).args(args).current_dir(dir).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn missing_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = specquant(&["compare", "--config", "nope.json"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("ERROR CONFIG_NOT_FOUND"), "{}", stderr(&o));
    assert_eq!(stderr(&o).lines().count(), 1);
}

#[test]
fn harmonic_compare_summary() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "harmonic.json", r#"{"schema": 1, "symbol": {"name": "harmonic"}}"#);
    let o = specquant(&["compare", "--config", "harmonic.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("hbar,max_abs_err,count"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "0.1");
    assert!(row[1].parse::<f64>().unwrap() <= 1e-8);
    assert_eq!(row[2], "4");
}

#[test]
fn quartic_maslov_line() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "quartic.json", r#"{"schema": 1, "symbol": {"name": "quartic"}}"#);
    let o = specquant(&["maslov", "--config", "quartic.json", "--lambda", "1.0"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let line = out.trim();
    assert!(line == "winding=1 holonomy=-1 cocycle=-1" || line == "winding=-1 holonomy=-1 cocycle=-1", "{line}");
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "q.json", r#"{"schema": 1, "symbol": {"name": "quartic"}, "window": {"e1": 0.5, "e2": 2.0, "delta": 0.1}}"#);
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        let o = specquant(&["bs", "--config", "q.json", "--hbar_list", "[0.1,0.05]", "--output_dir", "a"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let files: Vec<Vec<u8>> = ["bs.csv", "config.json"].iter().map(|f| std::fs::read(dir.path().join("a").join(f)).unwrap()).collect();
        snapshots.push(files);
    }
    assert_eq!(snapshots[0], snapshots[1]);
    let cfg = std::fs::read_to_string(dir.path().join("a/config.json")).unwrap();
    assert!(cfg.contains("\"resolution\"") && cfg.contains("\"tube_fraction\""));
    let csv = std::fs::read_to_string(dir.path().join("a/bs.csv")).unwrap();
    assert!(csv.starts_with("hbar,k,action,lambda\n"));
}

#[test]
fn config_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.json", r#"{"schema": 1}"#);
    write(dir.path(), "bad.json", r#"{"schema": 1,"#);
    write(dir.path(), "v2.json", r#"{"schema": 2}"#);
    let cases: [(&[&str], &str); 5] = [
        (&["action", "--config", "c.json", "--windw.e1", "0.1"], "CONFIG_INVALID"),
        (&["action", "--config", "bad.json"], "CONFIG_PARSE"),
        (&["action", "--config", "v2.json"], "CONFIG_SCHEMA"),
        (&["action", "--config", "c.json", "--lambda"], "USAGE"),
        (&["frobnicate"], "USAGE"),
    ];
    for (args, code) in cases {
        let o = specquant(args, dir.path());
        assert_eq!(o.status.code(), Some(3), "{args:?}");
        assert!(stderr(&o).starts_with(&format!("ERROR {code}:")), "{args:?}: {}", stderr(&o));
    }
    let o = Command::new(env!("CARGO_BIN_EXE_specquant"))
        .args(["action", "--config", "c.json"])
        .env("SPECQUANT_THREADS", "0")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn numerical_and_validation_failures() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.json", r#"{"schema": 1}"#);
    let o = specquant(&["bs", "--config", "c.json", "--lambda_grid.hi", "0.6"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("ERROR PROFILE_RANGE:"), "{}", stderr(&o));

    write(
        dir.path(),
        "saddle.json",
        r#"{"schema": 1, "symbol": {"name": "custom", "terms": [
            {"coeff": 1.0, "deg_x": 0, "deg_xi": 2}, {"coeff": -1.0, "deg_x": 2, "deg_xi": 0}]}}"#,
    );
    let o = specquant(&["validate", "--config", "saddle.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("ERROR VALIDATION_FAILED:"));
    assert!(stdout(&o).contains("\"h1_sublevel_compact\": false"));

    let o = specquant(&["validate", "--config", "c.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn action_profile_csv() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.json", r#"{"schema": 1, "lambda_grid": {"count": 5}}"#);
    let o = specquant(&["action", "--config", "c.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[0], "lambda,action,period");
    assert_eq!(rows.len(), 6);
    let last: Vec<f64> = rows[5].split(',').map(|x| x.parse().unwrap()).collect();
    assert!((last[1] - std::f64::consts::PI).abs() < 1e-9);
}

#[test]
fn symcalc_roundtrip_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "f.json",
        r#"{"center": "1", "N": 2, "D": 2, "coeffs": [["2", "3", "1/2"], ["1/3", "0", "1"], ["0", "-1", "0"]]}"#,
    );
    write(dir.path(), "c.json", r#"{"schema": 1, "symcalc": {"op": "roundtrip", "input": "f.json", "output": "g.json"}}"#);
    let o = specquant(&["symcalc", "--config", "c.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let g: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("g.json")).unwrap()).unwrap();
    assert_eq!(g["center"], "2");
    assert_eq!(g["coeffs"][0], serde_json::json!(["2", "1", "0"]));
    assert_eq!(g["coeffs"][1], serde_json::json!(["0", "0", "0"]));

    let o = specquant(&["symcalc", "--config", "c.json", "--symcalc.op", "compose"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("symcalc.second"));
}

#[test]
fn quasimode_sweep_csv() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.json", r#"{"schema": 1, "quasimode": {"sweep": [0.2], "points": 2}}"#);
    let o = specquant(&["quasimode", "--config", "c.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[0], "hbar,max_residual");
    let r: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!(r < 1e-8, "{r}");
}

#[test]
fn bargmann_table() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.json", r#"{"schema": 1, "bargmann": {"hbar_list": [0.5], "max_k": 1}}"#);
    let o = specquant(&["bargmann-check", "--config", "c.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[0], "hbar,k,isometry_error,uncertainty_ratio");
    assert_eq!(rows.len(), 3);
    let o = specquant(&["bargmann-check", "--config", "c.json", "--tolerances.isometry", "0"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}
