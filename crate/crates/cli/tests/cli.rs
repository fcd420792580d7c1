mod common;

use std::process::Command;

fn cospeech(args: &[&str], cwd: &std::path::Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_cospeech"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cospeech(&["no-such-command"], dir.path()).status.code(), Some(2));
    assert_eq!(
        cospeech(&["evaluate", "--seed", "x"], dir.path()).status.code(),
        Some(2)
    );
    std::fs::write(dir.path().join("bad.toml"), "unknown_key = 1\n").unwrap();
    assert_eq!(
        cospeech(&["--config", "bad.toml", "preprocess"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(cospeech(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn missing_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    common::tiny_toml(dir.path());
    let out = cospeech(&["--config", "run.toml", "train"], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let out = cospeech(&["--config", "run.toml", "preprocess"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    common::tiny_toml(dir.path());
    let out = cospeech(
        &[
            "--config",
            "run.toml",
            "--seed",
            "3",
            "--out",
            "elsewhere",
            "gen-synthetic",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("elsewhere/manifest.json").is_file());
    let out = cospeech(
        &[
            "--config",
            "run.toml",
            "--out",
            "run2",
            "preprocess",
            "--corpus",
            "elsewhere",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("run2/processed/index.json").is_file());
}
