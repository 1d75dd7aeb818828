//! Run artifacts on disk and their replay verification.
//!
//! A run directory holds:
//! - `manifest.json`: config echo, per-trial seeds, oracle digests
//! - `trials.csv`: per-trial rows at checkpoint rounds
//!   (`trial,policy,round,period,loss,expected_loss,cum_regret`)
//! - `aggregate.csv`: `policy,checkpoint,mean,stderr`
//! - optional `rounds-t<trial>-<policy>.csv` / `.json` game logs; the JSON
//!   carries the sealed attack draws so losses can be re-derived
//!
//! Replay regenerates every artifact from the manifest seed and compares
//! byte for byte, and independently recomputes each logged loss from the
//! sealed draws.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{GameTrace, Observation};
use crate::harness::{
    aggregate, run_experiment, AggPoint, ExperimentConfig, ExperimentOutput, HarnessError,
    TraceDetail,
};
use crate::oracle::OracleTable;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest unreadable: {0}")]
    BadManifest(String),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("{file}:{line}: mismatch\n  logged:     {found}\n  recomputed: {expected}")]
    Mismatch {
        file: String,
        line: usize,
        found: String,
        expected: String,
    },
    #[error("{file}: missing from run directory")]
    MissingFile { file: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleSummary {
    pub trial: u64,
    pub seed: u64,
    pub digest: u64,
    pub x_star: f64,
    pub lambda_star: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub generator: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub checkpoint_rounds: Vec<u64>,
    pub emit_rounds: bool,
    pub oracle: Vec<OracleSummary>,
    /// Artifact files, relative to the run directory (manifest excluded).
    pub files: Vec<String>,
}

fn fmt(v: f64) -> String {
    // Shortest round-trip representation; stable for byte-identical reruns.
    format!("{v}")
}

pub fn trials_csv(out: &ExperimentOutput) -> String {
    let mut s = String::from("trial,policy,round,period,loss,expected_loss,cum_regret\n");
    for trial in &out.trials {
        for run in &trial.runs {
            for row in &run.trace.checkpoints {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    trial.trial,
                    run.trace.meta.policy,
                    row.round,
                    fmt(row.period),
                    fmt(row.loss),
                    fmt(row.expected),
                    fmt(row.cum_regret),
                ));
            }
        }
    }
    s
}

pub fn aggregate_csv(curves: &[(String, Vec<AggPoint>)]) -> String {
    let mut s = String::from("policy,checkpoint,mean,stderr\n");
    for (policy, points) in curves {
        for p in points {
            s.push_str(&format!(
                "{},{},{},{}\n",
                policy,
                p.round,
                fmt(p.mean),
                fmt(p.stderr)
            ));
        }
    }
    s
}

pub fn oracle_csv(table: &OracleTable) -> String {
    let mut s = String::from("period,l,lambda,gap\n");
    for i in 0..table.periods.len() {
        s.push_str(&format!(
            "{},{},{},{}\n",
            fmt(table.periods[i]),
            fmt(table.expected[i]),
            fmt(table.lambda[i]),
            fmt(table.gaps[i]),
        ));
    }
    s
}

pub fn rounds_csv(game: &GameTrace) -> String {
    let mut s = String::from("node,round,tau_start,period,observed,attack_time_or_empty,loss\n");
    for node_records in &game.per_node {
        for r in node_records {
            let (observed, at) = match r.observation {
                Observation::Observed { attack_time } => ("1", fmt(attack_time)),
                Observation::Censored => ("0", String::new()),
            };
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.node,
                r.round,
                fmt(r.tau_start),
                fmt(r.period),
                observed,
                at,
                fmt(r.loss),
            ));
        }
    }
    s
}

pub fn rounds_json(game: &GameTrace) -> String {
    serde_json::to_string_pretty(game).expect("game trace serializes")
}

fn aggregate_curves(out: &ExperimentOutput) -> Result<Vec<(String, Vec<AggPoint>)>, HarnessError> {
    let mut curves = Vec::new();
    for &pid in &out.config.policies {
        let traces = out.traces_for(pid);
        curves.push((pid.name().to_string(), aggregate(&traces)?));
    }
    Ok(curves)
}

fn build_manifest(out: &ExperimentOutput, emit_rounds: bool) -> Manifest {
    let mut files = vec!["trials.csv".to_string(), "aggregate.csv".to_string()];
    if emit_rounds {
        for trial in &out.trials {
            for run in &trial.runs {
                files.push(format!("rounds-t{}-{}.csv", trial.trial, run.trace.meta.policy));
                files.push(format!("rounds-t{}-{}.json", trial.trial, run.trace.meta.policy));
            }
        }
    }
    Manifest {
        generator: format!("flipbandit {}", env!("CARGO_PKG_VERSION")),
        config: out.config.clone(),
        seeds: out.trials.iter().map(|t| t.seed).collect(),
        checkpoint_rounds: out.checkpoint_rounds.clone(),
        emit_rounds,
        oracle: out
            .trials
            .iter()
            .map(|t| OracleSummary {
                trial: t.trial,
                seed: t.seed,
                digest: t.table.digest(),
                x_star: t.table.x_star,
                lambda_star: t.table.lambda_star,
            })
            .collect(),
        files,
    }
}

/// Regenerate every artifact of a finished run as (name, content) pairs,
/// manifest included.
pub fn render_artifacts(
    out: &ExperimentOutput,
    emit_rounds: bool,
) -> Result<Vec<(String, String)>, HarnessError> {
    let manifest = build_manifest(out, emit_rounds);
    let mut artifacts = vec![
        (
            "manifest.json".to_string(),
            serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
        ),
        ("trials.csv".to_string(), trials_csv(out)),
        (
            "aggregate.csv".to_string(),
            aggregate_csv(&aggregate_curves(out)?),
        ),
    ];
    if emit_rounds {
        for trial in &out.trials {
            for run in &trial.runs {
                let game = run
                    .game
                    .as_ref()
                    .expect("emit_rounds runs retain game traces");
                artifacts.push((
                    format!("rounds-t{}-{}.csv", trial.trial, run.trace.meta.policy),
                    rounds_csv(game),
                ));
                artifacts.push((
                    format!("rounds-t{}-{}.json", trial.trial, run.trace.meta.policy),
                    rounds_json(game),
                ));
            }
        }
    }
    Ok(artifacts)
}

/// Execute a config and write its artifacts under `dir`.
pub fn write_run(
    dir: &Path,
    cfg: &ExperimentConfig,
    emit_rounds: bool,
) -> Result<Vec<PathBuf>, ReplayError> {
    let detail = if emit_rounds { TraceDetail::Full } else { TraceDetail::Checkpoints };
    let out = run_experiment(cfg, detail)?;
    let artifacts = render_artifacts(&out, emit_rounds)?;
    fs::create_dir_all(dir).map_err(|source| ReplayError::Io { path: dir.to_path_buf(), source })?;
    let mut written = Vec::new();
    for (name, content) in artifacts {
        let path = dir.join(&name);
        let mut f = fs::File::create(&path)
            .map_err(|source| ReplayError::Io { path: path.clone(), source })?;
        f.write_all(content.as_bytes())
            .map_err(|source| ReplayError::Io { path: path.clone(), source })?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayReport {
    pub files_checked: usize,
    pub rounds_recomputed: usize,
}

fn read_file(dir: &Path, name: &str) -> Result<String, ReplayError> {
    let path = dir.join(name);
    fs::read_to_string(&path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            ReplayError::MissingFile { file: name.to_string() }
        } else {
            ReplayError::Io { path, source }
        }
    })
}

fn first_diff_line(found: &str, expected: &str) -> (usize, String, String) {
    for (i, (f, e)) in found.lines().zip(expected.lines()).enumerate() {
        if f != e {
            return (i + 1, f.to_string(), e.to_string());
        }
    }
    let fl = found.lines().count();
    let el = expected.lines().count();
    (
        fl.min(el) + 1,
        format!("<{fl} lines>"),
        format!("<{el} lines>"),
    )
}

/// Verify a run directory: recompute losses from sealed draws, then
/// regenerate everything from the manifest seed and compare byte for byte.
pub fn replay_dir(dir: &Path) -> Result<ReplayReport, ReplayError> {
    let manifest_text = read_file(dir, "manifest.json")?;
    let manifest: Manifest =
        serde_json::from_str(&manifest_text).map_err(|e| ReplayError::BadManifest(e.to_string()))?;

    // Independent check: recompute each logged loss from the sealed draws.
    let mut rounds_recomputed = 0usize;
    if manifest.emit_rounds {
        let spec = &manifest.config.loss;
        for name in manifest.files.iter().filter(|n| n.ends_with(".json")) {
            let text = read_file(dir, name)?;
            let game: GameTrace = serde_json::from_str(&text)
                .map_err(|e| ReplayError::BadManifest(format!("{name}: {e}")))?;
            for (node_records, node_sealed) in game.per_node.iter().zip(&game.sealed) {
                for (rec, sealed) in node_records.iter().zip(node_sealed) {
                    let expected = spec
                        .round_loss(rec.period, sealed.attack_time, sealed.threshold)
                        .map_err(|e| ReplayError::BadManifest(format!("{name}: {e}")))?;
                    if expected.to_bits() != rec.loss.to_bits() {
                        return Err(ReplayError::Mismatch {
                            file: name.clone(),
                            line: rounds_recomputed + 1,
                            found: fmt(rec.loss),
                            expected: fmt(expected),
                        });
                    }
                    rounds_recomputed += 1;
                }
            }
            // The paired CSV must match the JSON it was written with.
            let csv_name = name.replace(".json", ".csv");
            let csv_text = read_file(dir, &csv_name)?;
            let expected_csv = rounds_csv(&game);
            if csv_text != expected_csv {
                let (line, found, expected) = first_diff_line(&csv_text, &expected_csv);
                return Err(ReplayError::Mismatch { file: csv_name, line, found, expected });
            }
        }
    }

    // Full regeneration from the manifest seed.
    let detail = if manifest.emit_rounds { TraceDetail::Full } else { TraceDetail::Checkpoints };
    let out = run_experiment(&manifest.config, detail)?;
    let artifacts = render_artifacts(&out, manifest.emit_rounds)?;
    let mut files_checked = 0usize;
    for (name, expected) in &artifacts {
        let found = if name == "manifest.json" { manifest_text.clone() } else { read_file(dir, name)? };
        if &found != expected {
            let (line, f, e) = first_diff_line(&found, expected);
            return Err(ReplayError::Mismatch { file: name.clone(), line, found: f, expected: e });
        }
        files_checked += 1;
    }
    Ok(ReplayReport { files_checked, rounds_recomputed })
}
