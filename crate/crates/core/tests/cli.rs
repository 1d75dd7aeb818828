//! End-to-end checks of the command-line interface: exit codes, artifact
//! layout, and replay verification.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flipbandit"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("flipbandit-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn minimal_config(dir: &Path) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(
        &path,
        r#"{
  "model": { "family": "uniform", "lo": 1.0, "hi": 3.0 },
  "loss": { "flavor": "binary", "defense_cost": 0.1, "cost_variant": "none" },
  "periods": { "mode": "list", "values": [2.0] },
  "policies": ["elim"],
  "horizon": 10,
  "trials": 1,
  "seed": 3
}"#,
    )
    .unwrap();
    path
}

#[test]
fn run_minimal_config_writes_artifacts() {
    let dir = temp_dir("run-min");
    let cfg = minimal_config(&dir);
    let out = dir.join("out");
    let status = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    for f in ["manifest.json", "trials.csv", "aggregate.csv"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let dir = temp_dir("run-bad");
    let cfg = dir.join("bad.json");
    fs::write(&cfg, "{ this is not json").unwrap();
    let out = dir.join("out");
    let output = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(!out.exists(), "partial outputs written on config error");

    // Valid JSON, invalid values: also exit 2, with field paths.
    fs::write(
        &cfg,
        r#"{
  "model": { "family": "uniform", "lo": 1.0, "hi": 3.0 },
  "loss": { "flavor": "binary", "defense_cost": 3.0, "cost_variant": "none" },
  "periods": { "mode": "list", "values": [] },
  "policies": ["elim"],
  "horizon": 0,
  "trials": 0,
  "seed": 3
}"#,
    )
    .unwrap();
    let output = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    for needle in ["loss.defense_cost", "periods.values", "horizon", "trials"] {
        assert!(stderr.contains(needle), "stderr missing {needle}: {stderr}");
    }
    assert!(!out.exists());
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn unknown_policy_override_exits_2() {
    let dir = temp_dir("run-badpol");
    let cfg = minimal_config(&dir);
    let out = dir.join("out");
    let output = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--policies", "does-not-exist"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn oracle_dump_prints_table() {
    let dir = temp_dir("oracle");
    let cfg = dir.join("config.json");
    fs::write(
        &cfg,
        r#"{
  "model": { "family": "uniform", "lo": 1.0, "hi": 3.0 },
  "loss": { "flavor": "binary", "defense_cost": 0.1, "cost_variant": "none" },
  "periods": { "mode": "list", "values": [1.0, 2.0, 3.0] },
  "policies": ["elim"],
  "horizon": 100,
  "trials": 1,
  "seed": 3
}"#,
    )
    .unwrap();
    let output = bin().args(["oracle-dump", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8(output.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("period,l,lambda,gap"));
    // lambda(1) = 0.1, lambda(2) = 0.3, lambda(3) = 1.1/3
    assert!(stdout.contains("1,0.1,0.1,0"));
    assert!(stdout.contains("2,0.6,0.3,"));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn replay_verifies_and_detects_mutation() {
    let dir = temp_dir("replay");
    let cfg = minimal_config(&dir);
    let out = dir.join("out");
    let status = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--emit-rounds")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let output = bin().args(["replay", "--dir"]).arg(&out).output().unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    assert!(String::from_utf8_lossy(&output.stdout).contains("verified"));

    // Regenerating into a fresh directory is byte-identical.
    let out2 = dir.join("out2");
    bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out2)
        .arg("--emit-rounds")
        .status()
        .unwrap();
    for entry in fs::read_dir(&out).unwrap() {
        let name = entry.unwrap().file_name();
        let a = fs::read(out.join(&name)).unwrap();
        let b = fs::read(out2.join(&name)).unwrap();
        assert_eq!(a, b, "file {name:?} differs between identical runs");
    }

    // Mutate one loss cell: replay exits 4 and points at the row.
    let victim = out.join("rounds-t0-elim.csv");
    let text = fs::read_to_string(&victim).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut cells: Vec<&str> = lines[1].split(',').collect();
    cells[6] = "42";
    lines[1] = cells.join(",");
    fs::write(&victim, lines.join("\n") + "\n").unwrap();
    let output = bin().args(["replay", "--dir"]).arg(&out).output().unwrap();
    assert_eq!(output.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&output.stderr).contains("rounds-t0-elim.csv"));
    let _ = fs::remove_dir_all(&dir);
}
