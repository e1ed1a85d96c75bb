use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn lab(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_obstacle-lab"));
    cmd.args(args).env_remove(obstacle_lab::OUTPUT_ENV);
    if let Some(dir) = env_out {
        cmd.env(obstacle_lab::OUTPUT_ENV, dir);
    }
    cmd.output().expect("binary runs")
}

fn shipped(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name).display().to_string()
}

#[test]
fn unknown_flags_exit_with_2() {
    let out = lab(&["trace", "--config", &shipped("halfspace-2d.toml"), "--frobnicate"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_configs_exit_with_2_and_name_the_rule() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "name = \"bad\"\n[radii]\nr_min = 0.001\n").unwrap();
    let out = lab(&["validate-config", "--config", path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("below 4h"));
}

#[test]
fn validate_config_prints_the_hash() {
    let out = lab(&["validate-config", "--config", &shipped("quadratic-2d.toml")], None);
    assert_eq!(out.status.code(), Some(0));
    let hash = String::from_utf8(out.stdout).unwrap();
    assert_eq!(hash.trim().len(), 16);
    assert!(hash.trim().chars().all(|c| c.is_ascii_hexdigit()));
}

#[test]
fn trace_writes_into_the_environment_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(&["trace", "--config", &shipped("halfspace-2d.toml"), "--quiet"], Some(dir.path()));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let trace = std::fs::read_to_string(dir.path().join("halfspace-2d/trace_00.csv")).unwrap();
    let hash = String::from_utf8(lab(&["validate-config", "--config", &shipped("halfspace-2d.toml")], None).stdout).unwrap();
    assert!(trace.lines().skip(1).all(|l| l.ends_with(hash.trim())));
}

#[test]
fn failing_checks_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("strict.toml");
    let text = std::fs::read_to_string(shipped("halfspace-2d.toml")).unwrap();
    std::fs::write(&path, text.replace("[checks]\n", "[checks]\nnondegeneracy_floor = 0.9\n")).unwrap();
    let out = lab(
        &["classify", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()],
        None,
    );
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL nondegeneracy"));
}
