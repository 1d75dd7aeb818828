//! Simulator and online-learning policies for timing security updates
//! against stealthy attacks with unknown attack-time distributions.
//!
//! The defender repeatedly chooses a defense period `x` (time between
//! security updates). Each round, an attacker needs a random time `a ~ F`
//! to compromise the resource; the defender pays
//! `f[(x - a)^+] + c_d` and only learns `a` when the attack succeeded
//! before the next update (`a < x`). Choosing among candidate periods is a
//! time-associative bandit problem: arms consume different amounts of wall
//! time, so policies compete on loss per unit time `lambda(x) = l(x) / x`
//! rather than per-round loss, and playing a long period reveals the loss
//! of every shorter period (side observations).
//!
//! Crate layout:
//! - [`attack`]: attack-time distributions and round-loss definitions
//! - [`env`]: round-by-round game simulation with censored feedback
//! - [`oracle`]: exact expected losses, optimal periodic policy, regret
//! - [`policy`]: the learners (elimination UCB, time-average UCB, costly
//!   attack variants)
//! - [`harness`]: seeded multi-trial experiments and aggregation
//! - [`report`]: regret-bound evaluation against measured regret
//! - [`trace`] / [`output`]: run artifacts (CSV/JSON) and replay checks

pub mod attack;
pub mod env;
pub mod harness;
pub mod oracle;
pub mod output;
pub mod policy;
pub mod quad;
pub mod report;
pub mod trace;

pub use attack::{AttackModel, CostVariant, LossFlavor, LossSpec};
pub use env::{Environment, FeedbackRecord, GameTrace, Observation};
pub use harness::{ExperimentConfig, ExperimentOutput, TraceDetail};
pub use oracle::OracleTable;
pub use policy::{ElimRule, Policy};
