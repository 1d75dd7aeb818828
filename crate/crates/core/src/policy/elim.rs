//! Stage-based elimination learner driven by side observations.
//!
//! Only the longest active period is ever played: every round then yields
//! a loss sample for each active arm (an observed attack reveals all of
//! them; a censored round pins every shorter period at the defense cost),
//! so each arm's mean is as if it had been played in every round so far.

use crate::attack::LossSpec;
use crate::env::{side_observations, FeedbackRecord};

use super::{
    clamped_log, confidence_radius, cube_root_ceil, eliminate, log_clamp_active,
    right_endpoint_grid, stage_gamma, stage_target, ArmStats, ArmView, ElimRule, Policy,
    StageRecord,
};

#[derive(Debug, Clone)]
pub struct EliminationPolicy {
    name: &'static str,
    spec: LossSpec,
    periods: Vec<f64>,
    horizon: u64,
    rule: ElimRule,
    stats: Vec<ArmStats>,
    /// Active arm indices, ascending by period.
    active: Vec<usize>,
    stage: u32,
    delta: f64,
    gamma: f64,
    /// Formula value of the current cumulative stage target n_m.
    raw_target: u64,
    rounds: u64,
    /// Set once the log clamp would bind: halving stops and the longest
    /// active period is simply played out to the horizon.
    playout: bool,
    log: Vec<StageRecord>,
    eliminated_at: Vec<Option<u64>>,
}

impl EliminationPolicy {
    pub fn new(spec: LossSpec, mut periods: Vec<f64>, horizon: u64, rule: ElimRule) -> Self {
        assert!(!periods.is_empty(), "need at least one period");
        periods.sort_by(f64::total_cmp);
        let k = periods.len();
        let gamma = stage_gamma(periods[0], periods[k - 1]);
        let raw_target = stage_target(1.0, gamma, horizon, k);
        EliminationPolicy {
            name: match rule {
                ElimRule::Standard => "elim",
                ElimRule::Aggressive => "elim-aggressive",
            },
            stats: periods.iter().map(|&p| ArmStats::new(p)).collect(),
            active: (0..k).collect(),
            spec,
            periods,
            horizon,
            rule,
            stage: 0,
            delta: 1.0,
            gamma,
            raw_target,
            rounds: 0,
            playout: false,
            log: Vec::new(),
            eliminated_at: vec![None; k],
        }
    }

    /// Continuous-period variant: discretize `[x_min, x_max]` into
    /// `n = ceil(T^(1/3))` right-endpoint arms and run the finite learner.
    pub fn continuous(
        spec: LossSpec,
        x_min: f64,
        x_max: f64,
        horizon: u64,
        rule: ElimRule,
    ) -> Self {
        let n = cube_root_ceil(horizon);
        let grid = right_endpoint_grid(x_min, x_max, n);
        let mut p = Self::new(spec, grid, horizon, rule);
        p.name = "elim-continuous";
        p
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn active_periods(&self) -> Vec<f64> {
        self.active.iter().map(|&i| self.periods[i]).collect()
    }

    pub fn rounds_observed(&self) -> u64 {
        self.rounds
    }

    /// Round at which each arm was eliminated, if it was.
    pub fn eliminated_at(&self) -> &[Option<u64>] {
        &self.eliminated_at
    }

    pub fn rule(&self) -> ElimRule {
        self.rule
    }

    fn active_pairs(&self) -> Vec<(f64, f64)> {
        self.active
            .iter()
            .map(|&i| (self.stats[i].period, self.stats[i].mean_loss()))
            .collect()
    }

    fn run_elimination(&mut self) {
        let arms = self.active_pairs();
        let k = self.periods.len();
        let c = confidence_radius(self.delta, self.raw_target, self.horizon, k);
        let lambda_bar = super::lambda_floor(&arms, c);
        let x_shortest = arms[0].0;
        let keep = eliminate(&arms, lambda_bar, c, x_shortest, self.rule);

        let mut eliminated = Vec::new();
        let mut survivors = Vec::with_capacity(self.active.len());
        for (slot, &arm) in self.active.iter().enumerate() {
            if keep[slot] {
                survivors.push(arm);
            } else {
                eliminated.push(self.periods[arm]);
                self.eliminated_at[arm] = Some(self.rounds);
            }
        }
        self.log.push(StageRecord {
            stage: self.stage,
            delta: self.delta,
            gamma: self.gamma,
            n_target: self.raw_target,
            confidence: c,
            lambda_bar,
            end_round: self.rounds,
            stats: self
                .active
                .iter()
                .map(|&i| ArmView {
                    period: self.stats[i].period,
                    count: self.stats[i].count,
                    mean_loss: self.stats[i].mean_loss(),
                    active: true,
                })
                .collect(),
            eliminated,
            stage_plays: Vec::new(),
        });
        self.active = survivors;
    }

    fn maybe_advance(&mut self) {
        loop {
            if self.playout || self.active.len() <= 1 || self.rounds >= self.horizon {
                return;
            }
            if self.rounds < self.raw_target.min(self.horizon) {
                return;
            }
            self.run_elimination();
            if self.active.len() <= 1 {
                return;
            }
            let next_delta = self.delta / 2.0;
            if log_clamp_active(self.horizon, self.periods.len(), next_delta) {
                // Further halving is statistically meaningless at this
                // horizon; keep playing the longest survivor.
                self.playout = true;
                return;
            }
            self.stage += 1;
            self.delta = next_delta;
            let x1 = self.periods[self.active[0]];
            let x2 = self.periods[*self.active.last().unwrap()];
            self.gamma = stage_gamma(x1, x2);
            self.raw_target = stage_target(self.delta, self.gamma, self.horizon, self.periods.len());
            // A shrunken gamma can leave the new target already met; the
            // loop then runs the next elimination as a zero-length stage.
            if self.stage > 200 {
                self.playout = true;
                return;
            }
        }
    }
}

impl Policy for EliminationPolicy {
    fn name(&self) -> &'static str {
        self.name
    }

    fn next_period(&mut self) -> f64 {
        self.periods[*self.active.last().expect("active set never empties")]
    }

    fn observe(&mut self, rec: &FeedbackRecord) {
        let active_periods = self.active_periods();
        for (slot, (_, loss)) in side_observations(&self.spec, rec, &active_periods)
            .into_iter()
            .enumerate()
        {
            // The played arm is always the longest active, so every active
            // arm's loss is determinable this round.
            let loss = loss.expect("played period dominates all active arms");
            self.stats[self.active[slot]].push(loss);
        }
        self.rounds += 1;
        self.maybe_advance();
    }

    fn periods(&self) -> &[f64] {
        &self.periods
    }

    fn stage_log(&self) -> &[StageRecord] {
        &self.log
    }

    fn arm_snapshot(&self) -> Vec<ArmView> {
        self.stats
            .iter()
            .enumerate()
            .map(|(i, s)| ArmView {
                period: s.period,
                count: s.count,
                mean_loss: s.mean_loss(),
                active: self.eliminated_at[i].is_none(),
            })
            .collect()
    }
}

/// Current stage parameters for reporting (delta, gamma, n_target, c_m).
impl EliminationPolicy {
    pub fn stage_params(&self) -> (f64, f64, u64, f64) {
        let c = confidence_radius(self.delta, self.raw_target, self.horizon, self.periods.len());
        (self.delta, self.gamma, self.raw_target, c)
    }

    pub fn clamp_reached(&self) -> bool {
        self.playout
    }

    /// The clamped log value for the current stage (reporting only).
    pub fn current_log_value(&self) -> f64 {
        clamped_log(self.horizon, self.periods.len(), self.delta)
    }
}
