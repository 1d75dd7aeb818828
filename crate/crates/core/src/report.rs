//! Regret-bound values computed from oracle quantities, reported next to
//! measured mean regret. Logs are clamped below at 1 so bound values stay
//! finite on easy instances; every bound is compared as measured <= bound.

use serde::{Deserialize, Serialize};

use crate::attack::AttackModel;
use crate::oracle::OracleTable;

fn clamped_ln(z: f64) -> f64 {
    z.ln().max(1.0)
}

/// Finite-arm elimination bound:
/// `48 gamma log(T (K+1) gap_max^2 / 4) / gap_min + sum_i (gap_i + 48 / gap_i)`
/// over suboptimal arms. Zero when every arm is optimal.
pub fn finite_arm_bound(gamma: f64, table: &OracleTable, horizon: u64, arms: usize) -> f64 {
    let positive: Vec<f64> = table.gaps.iter().copied().filter(|&g| g > 0.0).collect();
    let (Some(gap_min), Some(gap_max)) = (
        table.gap_min_positive,
        positive.iter().copied().reduce(f64::max),
    ) else {
        return 0.0;
    };
    let log_term = clamped_ln(horizon as f64 * (arms as f64 + 1.0) * gap_max * gap_max / 4.0);
    48.0 * gamma * log_term / gap_min
        + positive.iter().map(|&g| g + 48.0 / g).sum::<f64>()
}

/// Continuous-period bound at discretization level `n`:
/// `3 L' T / n + 48 gamma log(T (n+1)) / (L'/n) + 48 n^2 / L' + n gap_max`.
pub fn continuous_bound(l_prime: f64, n: u64, horizon: u64, gamma: f64, gap_max: f64) -> f64 {
    let n_f = n as f64;
    let t = horizon as f64;
    3.0 * l_prime * t / n_f
        + 48.0 * gamma * clamped_ln(t * (n_f + 1.0)) / (l_prime / n_f)
        + 48.0 * n_f * n_f / l_prime
        + n_f * gap_max
}

/// Per-arm constant `B_i = 32 gamma log(T (K+1) gap_i^2 / 4)`; zero for
/// optimal arms (their terms never enter a bound).
pub fn b_constant(gamma: f64, gap: f64, horizon: u64, arms: usize) -> f64 {
    if gap <= 0.0 {
        return 0.0;
    }
    32.0 * gamma * clamped_ln(horizon as f64 * (arms as f64 + 1.0) * gap * gap / 4.0)
}

/// Fixed-attack-cost bound: over suboptimal arms,
/// `sum_{x_i <= x0} B_i / gap_i + sum_{x_i > x0} min(B_i / gap_i, gap_i / p_i)`
/// plus the finite-arm bound, with `p_i` the probability an attack is
/// observed when playing `x_i`.
pub fn fixed_cost_bound(
    gamma: f64,
    table: &OracleTable,
    model: &AttackModel,
    threshold: f64,
    horizon: u64,
    arms: usize,
) -> f64 {
    let mut extra = 0.0;
    for (i, &x) in table.periods.iter().enumerate() {
        let gap = table.gaps[i];
        if gap <= 0.0 {
            continue;
        }
        let b = b_constant(gamma, gap, horizon, arms);
        if x <= threshold {
            extra += b / gap;
        } else {
            let p = model.cdf_below(x);
            let via_observation = if p > 0.0 { gap / p } else { f64::INFINITY };
            extra += (b / gap).min(via_observation);
        }
    }
    extra + finite_arm_bound(gamma, table, horizon, arms)
}

/// Random-attack-cost bound: `sum_i B_i / gap_i + sum_i (gap_i + 48/gap_i)`.
pub fn random_cost_bound(gamma: f64, table: &OracleTable, horizon: u64, arms: usize) -> f64 {
    table
        .gaps
        .iter()
        .filter(|&&g| g > 0.0)
        .map(|&g| b_constant(gamma, g, horizon, arms) / g + g + 48.0 / g)
        .sum()
}

/// One bound-vs-measured comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub label: String,
    pub bound: f64,
    pub measured: f64,
    pub holds: bool,
}

impl BoundCheck {
    pub fn new(label: impl Into<String>, bound: f64, measured: f64) -> Self {
        BoundCheck { label: label.into(), bound, measured, holds: measured <= bound }
    }
}

/// Which regret bound applies to an experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundKind {
    FiniteArm,
    Continuous { l_prime: f64 },
    FixedCost { threshold: f64 },
    RandomCost,
}

/// Pair every trial's measured regret (first configured policy) with the
/// bound value computed from that trial's oracle quantities.
pub fn theorem_report(
    out: &crate::harness::ExperimentOutput,
    kind: &BoundKind,
) -> Vec<BoundCheck> {
    let horizon = out.config.horizon;
    let (x_min, x_max) = out.config.periods.bounds();
    let gamma = crate::policy::stage_gamma(x_min, x_max);
    out.trials
        .iter()
        .map(|trial| {
            let arms = trial.table.periods.len();
            let bound = match kind {
                BoundKind::FiniteArm => finite_arm_bound(gamma, &trial.table, horizon, arms),
                BoundKind::Continuous { l_prime } => {
                    continuous_bound(*l_prime, arms as u64, horizon, gamma, trial.table.gap_max)
                }
                BoundKind::FixedCost { threshold } => {
                    fixed_cost_bound(gamma, &trial.table, &trial.model, *threshold, horizon, arms)
                }
                BoundKind::RandomCost => random_cost_bound(gamma, &trial.table, horizon, arms),
            };
            BoundCheck::new(
                format!("trial={} seed={}", trial.trial, trial.seed),
                bound,
                trial.runs[0].trace.final_regret,
            )
        })
        .collect()
}
