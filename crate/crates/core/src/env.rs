//! Round-by-round simulation of the timing game.
//!
//! The attacker is myopic: whenever it attacks at all (always, unless an
//! attack-cost variant suppresses rounds with `x <= x0`), it strikes
//! immediately after each defense move and needs a fresh `a ~ F` to
//! succeed. The defender sees feedback only at the end of a round, and the
//! attack time is revealed only when the attack landed (`a < x`).
//!
//! Attack draws are pre-generated per trial and indexed by resolution
//! order, so different policies (and pooled multi-node runs) facing the
//! same trial consume identical streams.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attack::{AttackModel, CostVariant, LossError, LossSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("unknown node id {node} (environment has {nodes} nodes)")]
    UnknownNode { node: usize, nodes: usize },
    #[error("period {period} outside [{x_min}, {x_max}]")]
    PeriodOutOfBounds { period: f64, x_min: f64, x_max: f64 },
    #[error("attack stream exhausted after {consumed} draws")]
    StreamExhausted { consumed: usize },
    #[error(transparent)]
    Loss(#[from] LossError),
}

/// What the defender learns at the end of a round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Observation {
    /// The attack succeeded before the update; its time is revealed.
    Observed { attack_time: f64 },
    /// No successful attack was seen up to the played period.
    Censored,
}

/// End-of-round feedback for one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub node: usize,
    /// 1-based round index on this node.
    pub round: u64,
    /// Wall time at which the round began; rounds on a node are contiguous.
    pub tau_start: f64,
    pub period: f64,
    pub observation: Observation,
    pub loss: f64,
    /// Evaluator metadata: the round had no attack because a cost variant
    /// suppressed it (`x <= x0`). Learners must not read this; the defender
    /// cannot distinguish it from an ordinary censored round.
    pub cost_suppressed: bool,
}

impl FeedbackRecord {
    pub fn end_time(&self) -> f64 {
        self.tau_start + self.period
    }
}

/// Evaluator-only record of the raw randomness behind a round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SealedRound {
    pub node: usize,
    pub round: u64,
    /// Drawn attack time, whether or not the attack happened or was seen.
    pub attack_time: f64,
    /// The round's cost threshold, when a cost variant is active.
    pub threshold: Option<f64>,
}

/// Full log of one game: learner-visible records plus the sealed draws.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GameTrace {
    pub seed: u64,
    /// Per-node record lists, each in round order.
    pub per_node: Vec<Vec<FeedbackRecord>>,
    /// Sealed draws aligned with `per_node`.
    pub sealed: Vec<Vec<SealedRound>>,
}

impl GameTrace {
    fn new(seed: u64, nodes: usize) -> Self {
        GameTrace {
            seed,
            per_node: vec![Vec::new(); nodes],
            sealed: vec![Vec::new(); nodes],
        }
    }

    pub fn total_rounds(&self) -> usize {
        self.per_node.iter().map(Vec::len).sum()
    }

    /// Cumulative wall time spent on a node.
    pub fn node_elapsed(&self, node: usize) -> f64 {
        self.per_node[node].last().map_or(0.0, FeedbackRecord::end_time)
    }
}

/// All records whose round ended at or before `before`, in wall-time order
/// with ties broken by node id then round.
pub fn pooled_feedback(trace: &GameTrace, before: f64) -> Vec<&FeedbackRecord> {
    let mut out: Vec<&FeedbackRecord> = trace
        .per_node
        .iter()
        .flatten()
        .filter(|r| r.end_time() <= before)
        .collect();
    out.sort_by(|a, b| {
        a.end_time()
            .total_cmp(&b.end_time())
            .then(a.node.cmp(&b.node))
            .then(a.round.cmp(&b.round))
    });
    out
}

/// Losses deducible for other periods from one round's feedback.
///
/// With no attack cost, an observed attack time reveals every period's loss
/// (longer ones included); a censored round pins the loss of every period
/// up to the one played at `c_d` and says nothing about longer ones. Under
/// a cost variant the defender cannot tell whether a shorter unplayed
/// period would have been attacked at all, so an observed round only
/// determines losses for periods at least as long as the one played (those
/// are certified attack-prone by the observation itself).
pub fn side_observations(
    spec: &LossSpec,
    rec: &FeedbackRecord,
    periods: &[f64],
) -> Vec<(f64, Option<f64>)> {
    periods
        .iter()
        .map(|&xi| {
            let value = match rec.observation {
                Observation::Observed { attack_time } => {
                    let known = match spec.cost_variant {
                        CostVariant::None => true,
                        _ => xi >= rec.period,
                    };
                    known.then(|| spec.attack_loss((xi - attack_time).max(0.0)) + spec.defense_cost)
                }
                Observation::Censored => (xi <= rec.period).then_some(spec.defense_cost),
            };
            (xi, value)
        })
        .collect()
}

/// Pre-generated randomness for one trial, shared across policies.
#[derive(Debug, Clone)]
pub struct AttackStream {
    attacks: Arc<Vec<f64>>,
    thresholds: Option<Arc<Vec<f64>>>,
}

impl AttackStream {
    /// Draw `len` rounds of randomness. Threshold draws are generated from
    /// the same rng stream, interleaved per round, so a stream is a pure
    /// function of (model, spec, rng state, len).
    pub fn generate<R: Rng + ?Sized>(
        model: &AttackModel,
        spec: &LossSpec,
        len: usize,
        rng: &mut R,
    ) -> Self {
        let mut attacks = Vec::with_capacity(len);
        match &spec.cost_variant {
            CostVariant::Random { threshold_model } => {
                let mut thresholds = Vec::with_capacity(len);
                for _ in 0..len {
                    attacks.push(model.sample(rng));
                    thresholds.push(threshold_model.sample(rng));
                }
                AttackStream {
                    attacks: Arc::new(attacks),
                    thresholds: Some(Arc::new(thresholds)),
                }
            }
            _ => {
                for _ in 0..len {
                    attacks.push(model.sample(rng));
                }
                AttackStream { attacks: Arc::new(attacks), thresholds: None }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.attacks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attacks.is_empty()
    }
}

/// One game instance: draws rounds, produces censored feedback, keeps the
/// trace. One environment per trial per policy; never shared.
#[derive(Debug, Clone)]
pub struct Environment {
    spec: LossSpec,
    x_min: f64,
    x_max: f64,
    taus: Vec<f64>,
    round_counts: Vec<u64>,
    cursor: usize,
    stream: AttackStream,
    trace: GameTrace,
}

impl Environment {
    pub fn new(
        spec: LossSpec,
        x_min: f64,
        x_max: f64,
        nodes: usize,
        stream: AttackStream,
        seed: u64,
    ) -> Self {
        Environment {
            spec,
            x_min,
            x_max,
            taus: vec![0.0; nodes],
            round_counts: vec![0; nodes],
            cursor: 0,
            stream,
            trace: GameTrace::new(seed, nodes),
        }
    }

    pub fn spec(&self) -> &LossSpec {
        &self.spec
    }

    pub fn trace(&self) -> &GameTrace {
        &self.trace
    }

    pub fn into_trace(self) -> GameTrace {
        self.trace
    }

    /// Wall time at which the node's next round would start.
    pub fn node_time(&self, node: usize) -> f64 {
        self.taus[node]
    }

    pub fn rounds_played(&self) -> usize {
        self.cursor
    }

    /// Play one round on `node` with period `x` and resolve it.
    pub fn play_round(&mut self, node: usize, x: f64) -> Result<FeedbackRecord, EnvError> {
        if node >= self.taus.len() {
            return Err(EnvError::UnknownNode { node, nodes: self.taus.len() });
        }
        if !(x >= self.x_min && x <= self.x_max) {
            return Err(EnvError::PeriodOutOfBounds { period: x, x_min: self.x_min, x_max: self.x_max });
        }
        if self.cursor >= self.stream.len() {
            return Err(EnvError::StreamExhausted { consumed: self.cursor });
        }
        let attack_time = self.stream.attacks[self.cursor];
        let threshold = match &self.spec.cost_variant {
            CostVariant::None => None,
            CostVariant::Fixed { threshold } => Some(*threshold),
            CostVariant::Random { .. } => {
                Some(self.stream.thresholds.as_ref().expect("random-cost stream")[self.cursor])
            }
        };
        self.cursor += 1;

        let attacked = threshold.is_none_or(|x0| x > x0);
        let loss = self.spec.round_loss(x, attack_time, threshold)?;
        let observation = if attacked && attack_time < x {
            Observation::Observed { attack_time }
        } else {
            Observation::Censored
        };

        self.round_counts[node] += 1;
        let rec = FeedbackRecord {
            node,
            round: self.round_counts[node],
            tau_start: self.taus[node],
            period: x,
            observation,
            loss,
            cost_suppressed: !attacked,
        };
        self.taus[node] += x;
        self.trace.per_node[node].push(rec.clone());
        self.trace.sealed[node].push(SealedRound {
            node,
            round: rec.round,
            attack_time,
            threshold,
        });
        Ok(rec)
    }
}
