//! Elimination learners for attackers with a hidden move cost.
//!
//! With a fixed cost threshold `x0`, playing a long period only informs a
//! shorter one that is already known to be attack-prone. The learner keeps
//! a set `Y` of periods certified longer than `x0` (any observed attack at
//! `x` certifies every period `>= x`), covers all of `Y` by playing its
//! longest active member, and explores each active period outside `Y`
//! individually, all with the same per-stage quota. Sample crediting is
//! outcome-blind: covered arms are credited only from cover plays,
//! uncovered arms only from their own plays.
//!
//! With a per-round random threshold no deterministic side observation
//! exists at all, so every active arm is played up to the stage quota and
//! credited only from its own plays.

use std::collections::VecDeque;

use crate::attack::LossSpec;
use crate::env::{FeedbackRecord, Observation};

use super::{
    confidence_radius, eliminate, lambda_floor, log_clamp_active, stage_gamma, stage_target,
    ArmStats, ArmView, ElimRule, Policy, StageRecord,
};

#[derive(Debug, Clone, Copy)]
struct Play {
    arm: usize,
    cover: bool,
}

#[derive(Debug, Clone)]
pub struct FixedCostPolicy {
    spec: LossSpec,
    periods: Vec<f64>,
    horizon: u64,
    stats: Vec<ArmStats>,
    active: Vec<usize>,
    in_y: Vec<bool>,
    stage: u32,
    delta: f64,
    gamma: f64,
    prev_target: u64,
    raw_target: u64,
    cover_left: u64,
    indiv_left: Vec<u64>,
    queue: VecDeque<Play>,
    pending: Option<Play>,
    rounds: u64,
    playout: bool,
    stage_plays: Vec<u64>,
    log: Vec<StageRecord>,
    eliminated_at: Vec<Option<u64>>,
}

impl FixedCostPolicy {
    pub fn new(spec: LossSpec, mut periods: Vec<f64>, horizon: u64) -> Self {
        assert!(!periods.is_empty(), "need at least one period");
        periods.sort_by(f64::total_cmp);
        let k = periods.len();
        let gamma = stage_gamma(periods[0], periods[k - 1]);
        let raw_target = stage_target(1.0, gamma, horizon, k);
        FixedCostPolicy {
            stats: periods.iter().map(|&p| ArmStats::new(p)).collect(),
            active: (0..k).collect(),
            in_y: vec![false; k],
            spec,
            periods,
            horizon,
            stage: 0,
            delta: 1.0,
            gamma,
            prev_target: 0,
            raw_target,
            cover_left: raw_target,
            indiv_left: vec![raw_target; k],
            queue: VecDeque::new(),
            pending: None,
            rounds: 0,
            playout: false,
            stage_plays: vec![0; k],
            log: Vec::new(),
            eliminated_at: vec![None; k],
        }
    }

    /// Periods certified longer than the attacker's threshold so far.
    pub fn known_attackable(&self) -> Vec<f64> {
        self.periods
            .iter()
            .zip(&self.in_y)
            .filter(|(_, &y)| y)
            .map(|(&p, _)| p)
            .collect()
    }

    pub fn active_periods(&self) -> Vec<f64> {
        self.active.iter().map(|&i| self.periods[i]).collect()
    }

    pub fn eliminated_at(&self) -> &[Option<u64>] {
        &self.eliminated_at
    }

    fn cover_arm(&self) -> Option<usize> {
        self.active.iter().rev().copied().find(|&i| self.in_y[i])
    }

    fn active_pairs(&self) -> Vec<(f64, f64)> {
        self.active
            .iter()
            .map(|&i| (self.stats[i].period, self.stats[i].mean_loss()))
            .collect()
    }

    fn stage_exhausted(&self) -> bool {
        let cover_usable = self.cover_arm().is_some() && self.cover_left > 0;
        let indiv_pending = self
            .active
            .iter()
            .any(|&i| !self.in_y[i] && self.indiv_left[i] > 0);
        !cover_usable && !indiv_pending
    }

    fn refill_sweep(&mut self) {
        if self.playout {
            if let Some(c) = self.cover_arm() {
                self.queue.push_back(Play { arm: c, cover: true });
            }
            for &i in self.active.iter().rev() {
                if !self.in_y[i] {
                    self.queue.push_back(Play { arm: i, cover: false });
                }
            }
            return;
        }
        if let Some(c) = self.cover_arm() {
            if self.cover_left > 0 {
                self.queue.push_back(Play { arm: c, cover: true });
                self.cover_left -= 1;
            }
        }
        for &i in self.active.iter().rev() {
            if !self.in_y[i] && self.indiv_left[i] > 0 {
                self.queue.push_back(Play { arm: i, cover: false });
                self.indiv_left[i] -= 1;
            }
        }
    }

    fn end_stage(&mut self) {
        let arms = self.active_pairs();
        let k = self.periods.len();
        let c = confidence_radius(self.delta, self.raw_target, self.horizon, k);
        let lambda_bar = lambda_floor(&arms, c);
        let keep = eliminate(&arms, lambda_bar, c, arms[0].0, ElimRule::Standard);

        let mut eliminated = Vec::new();
        let mut survivors = Vec::new();
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
            stage_plays: self
                .active
                .iter()
                .map(|&i| (self.periods[i], self.stage_plays[i]))
                .collect(),
        });
        self.active = survivors;
        self.stage_plays.iter_mut().for_each(|c| *c = 0);
        if self.active.len() <= 1 {
            return;
        }

        let next_delta = self.delta / 2.0;
        if log_clamp_active(self.horizon, k, next_delta) || self.stage > 200 {
            self.playout = true;
            return;
        }
        self.stage += 1;
        self.delta = next_delta;
        let x1 = self.periods[self.active[0]];
        let x2 = self.periods[*self.active.last().unwrap()];
        self.gamma = stage_gamma(x1, x2);
        self.prev_target = self.raw_target;
        self.raw_target = stage_target(self.delta, self.gamma, self.horizon, k);
        let quota = self.raw_target.saturating_sub(self.prev_target);
        self.cover_left = quota;
        for &i in &self.active {
            self.indiv_left[i] = if self.in_y[i] { 0 } else { quota };
        }
    }

    fn certify_from(&mut self, observed_period: f64) {
        for &j in &self.active {
            if self.periods[j] >= observed_period && !self.in_y[j] {
                self.in_y[j] = true;
                self.indiv_left[j] = 0;
            }
        }
    }
}

impl Policy for FixedCostPolicy {
    fn name(&self) -> &'static str {
        "elim-fixed-cost"
    }

    fn next_period(&mut self) -> f64 {
        if self.active.len() == 1 {
            let arm = self.active[0];
            self.pending = Some(Play { arm, cover: self.in_y[arm] });
            return self.periods[arm];
        }
        loop {
            // Drop queued individual plays for arms certified mid-sweep.
            while let Some(&front) = self.queue.front() {
                if !front.cover && self.in_y[front.arm] {
                    self.queue.pop_front();
                } else {
                    break;
                }
            }
            if let Some(play) = self.queue.pop_front() {
                self.pending = Some(play);
                return self.periods[play.arm];
            }
            if !self.playout && self.stage_exhausted() {
                self.end_stage();
                if self.active.len() == 1 {
                    let arm = self.active[0];
                    self.pending = Some(Play { arm, cover: self.in_y[arm] });
                    return self.periods[arm];
                }
            }
            self.refill_sweep();
        }
    }

    fn observe(&mut self, rec: &FeedbackRecord) {
        let play = self.pending.take().expect("observe follows next_period");
        debug_assert_eq!(self.periods[play.arm].to_bits(), rec.period.to_bits());
        if play.cover {
            // Cover plays credit every covered arm: their losses are
            // determinable whatever the outcome, so no selection bias.
            for &j in &self.active {
                if self.in_y[j] && self.periods[j] <= rec.period {
                    let loss = match rec.observation {
                        Observation::Observed { attack_time } => {
                            self.spec.attack_loss((self.periods[j] - attack_time).max(0.0))
                                + self.spec.defense_cost
                        }
                        Observation::Censored => self.spec.defense_cost,
                    };
                    self.stats[j].push(loss);
                }
            }
        } else {
            self.stats[play.arm].push(rec.loss);
        }
        if let Observation::Observed { .. } = rec.observation {
            self.certify_from(rec.period);
        }
        self.stage_plays[play.arm] += 1;
        self.rounds += 1;
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

/// Per-round random threshold: no deterministic side observations, so every
/// active arm is played to the stage quota and credited from its own plays.
#[derive(Debug, Clone)]
pub struct RandomCostPolicy {
    periods: Vec<f64>,
    horizon: u64,
    stats: Vec<ArmStats>,
    active: Vec<usize>,
    stage: u32,
    delta: f64,
    /// Fixed for the whole run: (1 + x_max / x_min)^2 over the full set.
    gamma: f64,
    prev_target: u64,
    raw_target: u64,
    quota_left: Vec<u64>,
    queue: VecDeque<usize>,
    pending: Option<usize>,
    rounds: u64,
    playout: bool,
    stage_plays: Vec<u64>,
    log: Vec<StageRecord>,
    eliminated_at: Vec<Option<u64>>,
}

impl RandomCostPolicy {
    pub fn new(_spec: LossSpec, mut periods: Vec<f64>, horizon: u64) -> Self {
        assert!(!periods.is_empty(), "need at least one period");
        periods.sort_by(f64::total_cmp);
        let k = periods.len();
        let gamma = stage_gamma(periods[0], periods[k - 1]);
        let raw_target = stage_target(1.0, gamma, horizon, k);
        RandomCostPolicy {
            stats: periods.iter().map(|&p| ArmStats::new(p)).collect(),
            active: (0..k).collect(),
            periods,
            horizon,
            stage: 0,
            delta: 1.0,
            gamma,
            prev_target: 0,
            raw_target,
            quota_left: vec![raw_target; k],
            queue: VecDeque::new(),
            pending: None,
            rounds: 0,
            playout: false,
            stage_plays: vec![0; k],
            log: Vec::new(),
            eliminated_at: vec![None; k],
        }
    }

    pub fn active_periods(&self) -> Vec<f64> {
        self.active.iter().map(|&i| self.periods[i]).collect()
    }

    fn end_stage(&mut self) {
        let arms: Vec<(f64, f64)> = self
            .active
            .iter()
            .map(|&i| (self.stats[i].period, self.stats[i].mean_loss()))
            .collect();
        let k = self.periods.len();
        let c = confidence_radius(self.delta, self.raw_target, self.horizon, k);
        let lambda_bar = lambda_floor(&arms, c);
        let keep = eliminate(&arms, lambda_bar, c, arms[0].0, ElimRule::Standard);

        let mut eliminated = Vec::new();
        let mut survivors = Vec::new();
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
            stage_plays: self
                .active
                .iter()
                .map(|&i| (self.periods[i], self.stage_plays[i]))
                .collect(),
        });
        self.active = survivors;
        self.stage_plays.iter_mut().for_each(|c| *c = 0);
        if self.active.len() <= 1 {
            return;
        }
        let next_delta = self.delta / 2.0;
        if log_clamp_active(self.horizon, k, next_delta) || self.stage > 200 {
            self.playout = true;
            return;
        }
        self.stage += 1;
        self.delta = next_delta;
        self.prev_target = self.raw_target;
        self.raw_target = stage_target(self.delta, self.gamma, self.horizon, k);
        let quota = self.raw_target.saturating_sub(self.prev_target);
        for &i in &self.active {
            self.quota_left[i] = quota;
        }
    }
}

impl Policy for RandomCostPolicy {
    fn name(&self) -> &'static str {
        "elim-random-cost"
    }

    fn next_period(&mut self) -> f64 {
        if self.active.len() == 1 {
            let arm = self.active[0];
            self.pending = Some(arm);
            return self.periods[arm];
        }
        loop {
            if let Some(arm) = self.queue.pop_front() {
                self.pending = Some(arm);
                return self.periods[arm];
            }
            if self.playout {
                for &i in self.active.iter().rev() {
                    self.queue.push_back(i);
                }
                continue;
            }
            if self.active.iter().all(|&i| self.quota_left[i] == 0) {
                self.end_stage();
                if self.active.len() == 1 {
                    let arm = self.active[0];
                    self.pending = Some(arm);
                    return self.periods[arm];
                }
                continue;
            }
            for &i in self.active.iter().rev() {
                if self.quota_left[i] > 0 {
                    self.queue.push_back(i);
                    self.quota_left[i] -= 1;
                }
            }
        }
    }

    fn observe(&mut self, rec: &FeedbackRecord) {
        let arm = self.pending.take().expect("observe follows next_period");
        debug_assert_eq!(self.periods[arm].to_bits(), rec.period.to_bits());
        self.stats[arm].push(rec.loss);
        self.stage_plays[arm] += 1;
        self.rounds += 1;
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
