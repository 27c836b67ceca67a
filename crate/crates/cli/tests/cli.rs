use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn peaklab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_peaklab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn verify_example_on_the_larger_disk_reports_the_branch_conflict() {
    let tmp = tempfile::tempdir().unwrap();
    let out = peaklab(&["verify-example1", "--radius", "2", "--junit", "-q"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&tmp.path().join("verification.json"));
    assert_eq!(v["tool"], "peaklab");
    assert!(v["version"].is_string());
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
    let notes = v["result"]["notes"].to_string();
    assert!(notes.contains("no autonomous f"), "{notes}");
    let junit = std::fs::read_to_string(tmp.path().join("junit.xml")).unwrap();
    assert!(junit.starts_with("<?xml") && junit.contains("<testsuite") && !junit.contains("<failure"));
}

#[test]
fn sublinear_power_fails_the_growth_condition() {
    let tmp = tempfile::tempdir().unwrap();
    let out = peaklab(&["hypothesis", "--family", "power", "--m", "0.5", "-q"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let v = read_json(&tmp.path().join("hypothesis.json"));
    assert!(v["result"]["report"]["min_A"].as_f64().unwrap() < 0.0);
    let out = peaklab(&["hypothesis", "--family", "power", "--m", "2", "-q"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn zero_level_of_coscos_is_written_as_csv_and_svg() {
    let tmp = tempfile::tempdir().unwrap();
    let out = peaklab(&["levels", "--field", "catalog:coscos", "--t", "0", "-q"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("levels.csv")).unwrap();
    assert!(csv.lines().count() > 100);
    let svg = std::fs::read_to_string(tmp.path().join("levels.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
}

#[test]
fn classify_coscos_finds_the_interior_maximum() {
    let tmp = tempfile::tempdir().unwrap();
    let out = peaklab(&["classify", "--field", "catalog:coscos", "-q"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let v = read_json(&tmp.path().join("critical_points.json"));
    let text = v["result"].to_string();
    assert!(text.contains("LocalMax") || text.contains("local_max"), "{text}");
    assert!(tmp.path().join("critical_points.svg").exists());
}

#[test]
fn solve_writes_field_and_convergence_log() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"nonlinearity":{"family":"power","m":2,"a":1,"c":1},"grid":{"n":64}}"#);
    let out = peaklab(&["solve", "--config", &cfg, "-q"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&tmp.path().join("convergence.json"));
    assert_eq!(v["result"]["log"]["converged"], true);
    assert!(tmp.path().join("solution.csv").exists());
}

#[test]
fn solver_failure_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"nonlinearity":{"family":"power","m":2,"a":1,"c":1},"grid":{"n":64},"solver":{"params":{"max_newton":1}}}"#,
    );
    let out = peaklab(&["solve", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn invalid_configuration_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"grid":{"n":64,"bogus":1}}"#);
    let out = peaklab(&["solve", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
    let out = peaklab(&["verify-example1", "--radius", "3"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    let out = peaklab(&["no-such-command"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn pohozaev_on_the_example_reports_energy_and_refinement() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"domain":{"type":"disk","center":[0,0],"radius":1},"nonlinearity":{"family":"recovered"}}"#,
    );
    let out = peaklab(
        &["pohozaev", "--config", &cfg, "--field", "catalog:example1", "--p", "0,0", "--delta", "1", "-q"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(tmp.path().join("pohozaev.json")).unwrap();
    assert!(text.contains("0.21691"), "energy 29π/420 missing");
    assert!(tmp.path().join("pohozaev_refinement.csv").exists());
}

#[test]
fn config_hash_ignores_the_output_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    peaklab(&["verify-example1", "-q"], &a);
    peaklab(&["verify-example1", "-q"], &b);
    let (x, y) = (read_json(&a.join("verification.json")), read_json(&b.join("verification.json")));
    assert_eq!(x["config_hash"], y["config_hash"]);
    assert_eq!(x, y);
}
