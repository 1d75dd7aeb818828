//! Per-run regret traces and their metadata.

use serde::{Deserialize, Serialize};

/// One played round as the evaluator sees it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRow {
    pub round: u64,
    pub period: f64,
    /// Realized loss.
    pub loss: f64,
    /// Oracle expected loss of the played period.
    pub expected: f64,
    /// Cumulative pseudo-regret after this round.
    pub cum_regret: f64,
}

/// Bound-reporting fields derived from the oracle for the run's instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub policy: String,
    pub trial: u64,
    pub seed: u64,
    pub oracle_digest: u64,
    /// (1 + x_max / x_min)^2 over the candidate periods.
    pub gamma: f64,
    pub gap_min: Option<f64>,
    pub gap_max: f64,
    /// Per-arm bound constants 32 gamma log(T (K+1) gap_i^2 / 4).
    pub b_values: Vec<f64>,
    /// Per-arm probability that an attack is observed when playing x_i.
    pub p_values: Vec<f64>,
    pub lambda_star: f64,
}

/// Regret trajectory of one policy on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub meta: TraceMeta,
    pub horizon: u64,
    /// Full per-round rows; empty unless full detail was requested.
    pub rows: Vec<RoundRow>,
    /// The rows at the checkpoint rounds (always retained).
    pub checkpoints: Vec<RoundRow>,
    pub final_regret: f64,
    /// Same accumulation on realized losses; logged, never used for
    /// acceptance.
    pub final_realized_regret: f64,
    /// Plays per candidate arm.
    pub play_counts: Vec<u64>,
}

impl RegretTrace {
    pub fn regret_at(&self, round: u64) -> Option<f64> {
        self.checkpoints
            .iter()
            .find(|r| r.round == round)
            .map(|r| r.cum_regret)
    }
}

/// Checkpoint rounds {1, 2, 5} x 10^k up to the horizon, plus the horizon.
pub fn checkpoint_rounds(horizon: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut base = 1u64;
    'outer: loop {
        for mult in [1u64, 2, 5] {
            let r = match base.checked_mul(mult) {
                Some(r) => r,
                None => break 'outer,
            };
            if r > horizon {
                break 'outer;
            }
            out.push(r);
        }
        base = match base.checked_mul(10) {
            Some(b) => b,
            None => break,
        };
    }
    if out.last() != Some(&horizon) {
        out.push(horizon);
    }
    out
}
