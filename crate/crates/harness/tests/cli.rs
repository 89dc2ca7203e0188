use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn oqbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oqbm"))
        .args(args)
        .env_remove("OQBM_THREADS")
        .output()
        .expect("spawn oqbm")
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn consistency_writes_csv_and_manifest() {
    let out = tempfile::tempdir().unwrap();
    let o = oqbm(&["consistency", "--config", config("consistency.json").to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let csv = std::fs::read_to_string(out.path().join("results.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header, oqbm_harness::CSV_COLUMNS.join(","));
    assert!(csv.lines().skip(1).all(|l| l.starts_with("consistency-audit,")));

    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["experiment"], "consistency-audit");
    assert_eq!(m["subcommand"], "consistency");
    assert_eq!(m["seed"], 15);
    assert_eq!(m["threads"], 1);
    assert_eq!(m["passed"], true);
    assert_eq!(m["rows"].as_u64().unwrap() as usize, csv.lines().count() - 1);
}

#[test]
fn seed_flag_overrides_config() {
    let out = tempfile::tempdir().unwrap();
    let o = oqbm(&[
        "consistency",
        "--config",
        config("consistency.json").to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
        "--seed",
        "77",
        "--threads",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 77);
    assert_eq!(m["threads"], 2);
}

#[test]
fn tolerance_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // the counterexample TV is ½, so demanding 0.9 must fail
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"model": {"n": "zero", "h": "zero"}, "seed": 1, "tolerances": {"counterexample": 0.9}}"#,
    );
    let o = oqbm(&["consistency", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL consistency-audit"));
    let csv = std::fs::read_to_string(dir.path().join("out/results.csv")).unwrap();
    assert!(csv.lines().any(|l| l.contains("counterexample_tv") && l.contains(",fail,")));
}

#[test]
fn parse_error_names_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", "{\n  \"model\": {\"n\": \"zero\", \"h\": \"zero\"},\n  \"n_paths\": \"many\"\n}\n");
    let o = oqbm(&["simulate-oqw", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
    assert!(err.contains("n_paths"), "{err}");
}

#[test]
fn unknown_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{"model": {"n": "zero", "h": "zero"}, "n_path": 10}"#);
    let o = oqbm(&["consistency", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_path"));
}

#[test]
fn kind_mismatch_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "k.json", r#"{"kind": "regime-map", "model": {"n": "zero", "h": "zero"}}"#);
    let o = oqbm(&["consistency", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("regime-map"));
}

#[test]
fn missing_config_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = oqbm(&["dilate", "--config", dir.path().join("none.json").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
