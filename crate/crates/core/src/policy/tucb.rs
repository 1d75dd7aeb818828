//! Round-by-round UCB baseline on the time-average loss.
//!
//! Plays the arm minimizing a lower confidence bound on lambda:
//! `mean_i / x_i - sqrt(2 ln t / n_i) / x_i`. The plain variant updates
//! only the played arm; the side-observation variant feeds every arm whose
//! loss the round determines.

use crate::attack::LossSpec;
use crate::env::{side_observations, FeedbackRecord};

use super::{ArmStats, ArmView, Policy};

#[derive(Debug, Clone)]
pub struct TimeUcbPolicy {
    name: &'static str,
    spec: LossSpec,
    periods: Vec<f64>,
    stats: Vec<ArmStats>,
    side: bool,
    completed: u64,
}

impl TimeUcbPolicy {
    pub fn new(spec: LossSpec, mut periods: Vec<f64>, side: bool) -> Self {
        assert!(!periods.is_empty(), "need at least one period");
        periods.sort_by(f64::total_cmp);
        TimeUcbPolicy {
            name: if side { "tucb-side" } else { "tucb" },
            stats: periods.iter().map(|&p| ArmStats::new(p)).collect(),
            spec,
            periods,
            side,
            completed: 0,
        }
    }

    fn index(&self, i: usize, t: f64) -> f64 {
        let s = &self.stats[i];
        s.lambda() - (2.0 * t.ln() / s.count as f64).sqrt() / s.period
    }
}

impl Policy for TimeUcbPolicy {
    fn name(&self) -> &'static str {
        self.name
    }

    fn next_period(&mut self) -> f64 {
        if self.side {
            // One play of the longest arm seeds every arm's count.
            if self.stats.iter().any(|s| s.count == 0) {
                return *self.periods.last().unwrap();
            }
        } else if let Some(i) = self.stats.iter().position(|s| s.count == 0) {
            return self.periods[i];
        }
        let t = (self.completed + 1) as f64;
        let mut best = 0usize;
        let mut best_v = self.index(0, t);
        for i in 1..self.periods.len() {
            let v = self.index(i, t);
            if v < best_v {
                best_v = v;
                best = i;
            }
        }
        self.periods[best]
    }

    fn observe(&mut self, rec: &FeedbackRecord) {
        if self.side {
            for (i, (_, loss)) in side_observations(&self.spec, rec, &self.periods)
                .into_iter()
                .enumerate()
            {
                if let Some(loss) = loss {
                    self.stats[i].push(loss);
                }
            }
        } else {
            let i = self
                .periods
                .iter()
                .position(|p| p.to_bits() == rec.period.to_bits())
                .expect("played period is an arm");
            self.stats[i].push(rec.loss);
        }
        self.completed += 1;
    }

    fn periods(&self) -> &[f64] {
        &self.periods
    }

    fn arm_snapshot(&self) -> Vec<ArmView> {
        self.stats
            .iter()
            .map(|s| ArmView { period: s.period, count: s.count, mean_loss: s.mean_loss(), active: true })
            .collect()
    }
}
