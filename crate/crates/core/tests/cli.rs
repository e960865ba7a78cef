use std::process::Command;

fn subcurv(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_subcurv")).args(args).output().unwrap()
}

#[test]
fn bundled_fk_passes() {
    let out = subcurv(&["check-pde", "--scene", "bundled:fk", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn json_report_goes_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = subcurv(&[
        "lift-projective",
        "--scene",
        "bundled:projective-random",
        "--report",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["tool"], "subcurv");
    assert_eq!(v["passed"], true);
    assert!(!v["checks"].as_array().unwrap().is_empty());
}

#[test]
fn heavenly_delta_expectation_fails_numerically() {
    let out = subcurv(&["check-pde", "--scene", "bundled:heavenly"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn tiny_tolerance_is_a_numerical_failure() {
    let out = subcurv(&["check-pde", "--scene", "bundled:fk", "--tol", "1e-300"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.scene");
    std::fs::write(&bad, r#"{"kind": "pde", "fields": {"F": "u13 +"}, "sample": {"seed": 1}}"#).unwrap();
    let unknown = dir.path().join("unknown.scene");
    std::fs::write(&unknown, r#"{"kind": "pde", "fields": {"F": "u13 - foo"}, "sample": {"seed": 1}}"#).unwrap();
    for scene in [bad.to_str().unwrap(), unknown.to_str().unwrap(), "missing.scene", "bundled:nope"] {
        let out = subcurv(&["check-pde", "--scene", scene]);
        assert_eq!(out.status.code(), Some(2), "{scene}: {}", String::from_utf8_lossy(&out.stderr));
    }
    // right file, wrong subcommand
    let out = subcurv(&["contactify", "--scene", "bundled:fk"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn show_prints_schema_and_scenes() {
    let out = subcurv(&["show"]);
    assert_eq!(out.status.code(), Some(0));
    serde_json::from_slice::<serde_json::Value>(&out.stdout).unwrap();
    let out = subcurv(&["show", "heavenly"]);
    assert_eq!(out.status.code(), Some(0));
    subcurv::harness::SceneConfig::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
}
