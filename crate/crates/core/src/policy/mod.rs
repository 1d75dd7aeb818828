//! Learners for the timing game.
//!
//! All policies speak the same step interface: the harness asks for the
//! next period, plays it, and hands back the round's feedback. Policies
//! own their state; one instance per trial.
//!
//! The elimination learners proceed in stages. Stage `m` guesses the gap
//! scale as `delta_m = 2^-m`, plays until the global round count reaches
//!
//! ```text
//! n_m = ceil(2 * gamma_m * log(T (K+1) delta_m^2) / delta_m^2)
//! ```
//!
//! and then removes periods whose estimated relative loss separates from
//! the best by more than a confidence margin built from
//! `c_m = sqrt(log(T (K+1) delta_m^2) / (2 n_m))`. The log argument is
//! clamped below at `e`; once the clamp would bind, halving stops and the
//! learner simply plays out its best remaining schedule.

mod costly;
mod elim;
mod tucb;

pub use costly::{FixedCostPolicy, RandomCostPolicy};
pub use elim::EliminationPolicy;
pub use tucb::TimeUcbPolicy;

use serde::{Deserialize, Serialize};

use crate::env::FeedbackRecord;

/// Per-arm running statistics. Side observations count as samples, so
/// `count` tracks every round whose loss was determinable for this arm.
/// Losses accumulate with compensated summation so means agree with an
/// independent recomputation to well below 1e-12.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmStats {
    pub period: f64,
    pub count: u64,
    sum: f64,
    comp: f64,
}

impl ArmStats {
    pub fn new(period: f64) -> Self {
        ArmStats { period, count: 0, sum: 0.0, comp: 0.0 }
    }

    pub fn push(&mut self, loss: f64) {
        self.count += 1;
        let y = loss - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn mean_loss(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    /// Time-average loss estimate for this arm.
    pub fn lambda(&self) -> f64 {
        self.mean_loss() / self.period
    }
}

/// Elimination thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElimRule {
    /// Remove arm `i` when its relative loss exceeds
    /// `min_j [rel_j + 2 (1 + x_j / x_(1)) c_m]`.
    Standard,
    /// Remove arm `i` when its relative loss exceeds `min_j rel_j + 4 c_m`.
    Aggressive,
}

/// Snapshot of one arm at a stage boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmView {
    pub period: f64,
    pub count: u64,
    pub mean_loss: f64,
    pub active: bool,
}

/// Everything the evaluator needs about one completed stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: u32,
    pub delta: f64,
    pub gamma: f64,
    /// Formula value of the cumulative stage target n_m.
    pub n_target: u64,
    pub confidence: f64,
    pub lambda_bar: f64,
    /// Global round count when the stage's elimination ran.
    pub end_round: u64,
    /// Stats of arms active when the elimination ran.
    pub stats: Vec<ArmView>,
    /// Periods removed by this stage's elimination.
    pub eliminated: Vec<f64>,
    /// Per-arm play counts inside this stage (costly-attack learners only).
    pub stage_plays: Vec<(f64, u64)>,
}

/// Uniform step interface: `next_period` then `observe`, once per round.
pub trait Policy {
    fn name(&self) -> &'static str;
    fn next_period(&mut self) -> f64;
    fn observe(&mut self, rec: &FeedbackRecord);
    /// The candidate period set (all arms, not just active ones).
    fn periods(&self) -> &[f64];
    /// Stage-boundary log for elimination learners; empty otherwise.
    fn stage_log(&self) -> &[StageRecord] {
        &[]
    }
    /// Current per-arm statistics with activity flags.
    fn arm_snapshot(&self) -> Vec<ArmView>;
}

/// ln(T (K+1) delta^2), clamped below at 1.
pub fn clamped_log(horizon: u64, arms: usize, delta: f64) -> f64 {
    let z = horizon as f64 * (arms as f64 + 1.0) * delta * delta;
    z.ln().max(1.0)
}

/// True when the clamp binds, i.e. T (K+1) delta^2 <= e.
pub fn log_clamp_active(horizon: u64, arms: usize, delta: f64) -> bool {
    horizon as f64 * (arms as f64 + 1.0) * delta * delta <= std::f64::consts::E
}

/// Stage size factor from the spread of active periods.
pub fn stage_gamma(x_shortest: f64, x_longest: f64) -> f64 {
    let r = 1.0 + x_longest / x_shortest;
    r * r
}

/// Cumulative stage target n_m.
pub fn stage_target(delta: f64, gamma: f64, horizon: u64, arms: usize) -> u64 {
    let n = (2.0 * gamma * clamped_log(horizon, arms, delta) / (delta * delta)).ceil();
    n as u64
}

/// Confidence radius c_m for a stage that targets `n_m` samples.
pub fn confidence_radius(delta: f64, n_m: u64, horizon: u64, arms: usize) -> f64 {
    (clamped_log(horizon, arms, delta) / (2.0 * n_m as f64)).sqrt()
}

/// Optimistic floor on the optimal time-average loss:
/// `min_i (mean_i / x_i + c / x_i)` over `(period, mean)` pairs, which is a
/// strict minimum over `(mean_i + c) / x_i`; ties go to the shortest period
/// because pairs arrive sorted by period.
pub fn lambda_floor(arms: &[(f64, f64)], confidence: f64) -> f64 {
    debug_assert!(!arms.is_empty());
    let mut best = f64::INFINITY;
    for &(x, mean) in arms {
        let v = mean / x + confidence / x;
        if v < best {
            best = v;
        }
    }
    best
}

/// Apply an elimination rule to active arms given `(period, mean)` pairs
/// sorted by period. Returns keep flags; never empties the set (the arm
/// with the smallest relative loss survives regardless).
pub fn eliminate(
    arms: &[(f64, f64)],
    lambda_bar: f64,
    confidence: f64,
    x_shortest: f64,
    rule: ElimRule,
) -> Vec<bool> {
    let rel: Vec<f64> = arms.iter().map(|&(x, mean)| mean - x * lambda_bar).collect();
    let threshold = match rule {
        ElimRule::Standard => arms
            .iter()
            .zip(&rel)
            .map(|(&(x, _), &r)| r + 2.0 * (1.0 + x / x_shortest) * confidence)
            .fold(f64::INFINITY, f64::min),
        ElimRule::Aggressive => {
            rel.iter().copied().fold(f64::INFINITY, f64::min) + 4.0 * confidence
        }
    };
    let mut keep: Vec<bool> = rel.iter().map(|&r| r < threshold).collect();
    if keep.iter().all(|&k| !k) {
        // Confidence degenerated; retain the empirically best arm.
        let mut best = 0usize;
        for i in 1..rel.len() {
            if rel[i] < rel[best] {
                best = i;
            }
        }
        keep[best] = true;
    }
    keep
}

/// Smallest `n` with `n^3 >= t`; the arm-count rule for the continuous
/// learner, computed in integers so grid sizes are exact.
pub fn cube_root_ceil(t: u64) -> u64 {
    let mut n = (t as f64).cbrt().round() as u64;
    n = n.max(1);
    while n.saturating_mul(n).saturating_mul(n) < t {
        n += 1;
    }
    while n > 1 && (n - 1) * (n - 1) * (n - 1) >= t {
        n -= 1;
    }
    n
}

/// Right-endpoint grid over `[x_min, x_max]` with `n` cells:
/// `x_k = x_min + k (x_max - x_min) / n`, `k = 1..=n`. Always contains
/// `x_max`; never contains points below `x_min + (x_max - x_min) / n`.
pub fn right_endpoint_grid(x_min: f64, x_max: f64, n: u64) -> Vec<f64> {
    (1..=n)
        .map(|k| x_min + (k as f64 / n as f64) * (x_max - x_min))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_target_matches_formula_19_arms() {
        // T=1000, K=19, delta=1, x range [1,10] => gamma = 121 and
        // n_0 = ceil(242 * ln(20000)).
        let gamma = stage_gamma(1.0, 10.0);
        assert_eq!(gamma, 121.0);
        let n = stage_target(1.0, gamma, 1000, 19);
        let expect = (242.0 * (20_000.0f64).ln()).ceil() as u64;
        assert_eq!(n, expect);
        assert_eq!(n, 2397);
    }

    #[test]
    fn stage_target_halved_delta() {
        let n = stage_target(0.5, 121.0, 1000, 19);
        let expect = (968.0 * (5000.0f64).ln()).ceil() as u64;
        assert_eq!(n, expect);
        assert_eq!(n, 8245);
    }

    #[test]
    fn stage_target_clamped_regime() {
        // T (K+1) delta^2 <= e => log clamps to 1 and n_m = ceil(2 gamma / delta^2).
        let delta = 0.001;
        assert!(log_clamp_active(100, 3, delta));
        let n = stage_target(delta, 9.0, 100, 3);
        assert_eq!(n, (2.0 * 9.0 / (delta * delta)).ceil() as u64);
    }

    #[test]
    fn confidence_radius_examples() {
        let c = confidence_radius(1.0, 2397, 1000, 19);
        let expect = ((20_000.0f64).ln() / 4794.0).sqrt();
        assert!((c - expect).abs() < 1e-15);
        assert!((c - 0.045_45).abs() < 1e-4);
        // c_m -> 0 as n_m grows.
        assert!(confidence_radius(1.0, 1 << 40, 1000, 19) < 1e-4);
        // Clamped regime: sqrt(1 / (2 n)).
        let c = confidence_radius(0.001, 500, 100, 3);
        assert!((c - (1.0f64 / 1000.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn lambda_floor_examples() {
        let v = lambda_floor(&[(2.0, 0.24), (4.0, 0.40)], 0.04);
        // min(0.12 + 0.02, 0.10 + 0.01) = 0.11
        assert!((v - 0.11).abs() < 1e-15);
        let v = lambda_floor(&[(2.0, 0.24)], 0.04);
        assert!((v - 0.14).abs() < 1e-15);
    }

    #[test]
    fn eliminate_keeps_identical_arms() {
        let arms = [(2.0, 0.3), (2.0, 0.3)];
        let keep = eliminate(&arms, 0.1, 0.01, 2.0, ElimRule::Standard);
        assert_eq!(keep, vec![true, true]);
    }

    #[test]
    fn eliminate_hand_worked_example() {
        // rel = {0.75, 0.0}; competitor terms 0.79 and 0.06; threshold 0.06.
        let arms = [(1.0, 0.9), (2.0, 0.3)];
        let keep = eliminate(&arms, 0.15, 0.01, 1.0, ElimRule::Standard);
        assert_eq!(keep, vec![false, true]);
        // Brute-force check over both arms.
        let rel = [0.9 - 1.0 * 0.15, 0.3 - 2.0 * 0.15];
        let threshold = rel
            .iter()
            .zip([1.0, 2.0])
            .map(|(&r, x)| r + 2.0 * (1.0 + x / 1.0) * 0.01)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(keep, rel.iter().map(|&r| r < threshold).collect::<Vec<_>>());
    }

    #[test]
    fn eliminate_aggressive_variant() {
        let arms = [(1.0, 0.9), (2.0, 0.3)];
        let keep = eliminate(&arms, 0.15, 0.01, 1.0, ElimRule::Aggressive);
        // threshold = 0.0 + 4 * 0.01; arm 1's rel = 0.75 >= 0.04.
        assert_eq!(keep, vec![false, true]);
    }

    #[test]
    fn eliminate_never_empties() {
        // Degenerate zero confidence: strict inequality would nuke everything
        // but the best arm must survive.
        let arms = [(1.0, 0.5), (2.0, 0.5)];
        let keep = eliminate(&arms, 0.25, 0.0, 1.0, ElimRule::Aggressive);
        assert_eq!(keep.iter().filter(|&&k| k).count(), 1);
        assert!(keep[1]); // rel: 0.25 vs 0.0 -> arm 2 survives
    }

    #[test]
    fn cube_root_ceil_is_exact() {
        assert_eq!(cube_root_ceil(1), 1);
        assert_eq!(cube_root_ceil(8), 2);
        assert_eq!(cube_root_ceil(9), 3);
        assert_eq!(cube_root_ceil(27), 3);
        assert_eq!(cube_root_ceil(1000), 10);
        assert_eq!(cube_root_ceil(1001), 11);
        assert_eq!(cube_root_ceil(100_000), 47);
    }

    #[test]
    fn grid_examples() {
        let g = right_endpoint_grid(1.0, 10.0, 3);
        assert_eq!(g, vec![4.0, 7.0, 10.0]);
        let g = right_endpoint_grid(1.0, 10.0, 10);
        assert_eq!(g.len(), 10);
        assert_eq!(*g.last().unwrap(), 10.0);
        assert!(g[0] >= 1.0 + 9.0 / 10.0 - 1e-12);
    }

    #[test]
    fn arm_stats_lambda_consistency() {
        let mut s = ArmStats::new(2.5);
        for i in 0..100 {
            s.push(0.1 + 0.01 * (i % 7) as f64);
        }
        assert!((s.lambda() * s.period - s.mean_loss()).abs() < 1e-12);
        assert_eq!(s.count, 100);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn delta_halves_exactly(m in 0u32..50) {
                let mut delta = 1.0f64;
                for _ in 0..m {
                    delta /= 2.0;
                }
                prop_assert_eq!(delta, 2.0f64.powi(-(m as i32)));
            }

            #[test]
            fn stage_target_monotone_with_fixed_gamma(
                horizon in 10u64..1_000_000,
                arms in 1usize..64,
                gamma in 4.0f64..400.0,
                stages in 1u32..12,
            ) {
                let mut prev = 0u64;
                let mut delta = 1.0f64;
                for _ in 0..stages {
                    let n = stage_target(delta, gamma, horizon, arms);
                    prop_assert!(n >= prev, "n_m decreased: {} < {}", n, prev);
                    prev = n;
                    delta /= 2.0;
                }
            }

            #[test]
            fn grid_respects_bounds(n in 1u64..200, lo in 0.1f64..5.0, span in 0.5f64..20.0) {
                let hi = lo + span;
                let g = right_endpoint_grid(lo, hi, n);
                prop_assert_eq!(g.len(), n as usize);
                prop_assert_eq!(*g.last().unwrap(), hi);
                let first_allowed = lo + span / n as f64;
                prop_assert!(g[0] >= first_allowed - 1e-9);
                for w in g.windows(2) {
                    prop_assert!(w[0] < w[1]);
                }
            }
        }
    }
}
