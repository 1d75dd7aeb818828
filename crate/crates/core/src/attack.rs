//! Attack-time distributions and per-round loss definitions.
//!
//! `AttackModel` is the distribution of the time an attacker needs to
//! compromise the resource after a defense move. `LossSpec` is the
//! defender's round loss `f[(x - a)^+] + c_d`, with a binary or linear
//! attack-loss shape and an optional attack-cost variant in which the
//! attacker skips rounds whose period is at most a threshold `x0`.
//!
//! Everything here is immutable after construction and shared freely
//! across concurrent trials; random streams are owned per trial.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::{self, QuadError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{field}: must be positive, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("uniform bounds invalid: lo={lo}, hi={hi} (need 0 <= lo < hi)")]
    BadUniformBounds { lo: f64, hi: f64 },
    #[error("empirical model needs at least one sample")]
    EmptyEmpirical,
    #[error("empirical sample {value} is negative or non-finite")]
    BadEmpiricalSample { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossError {
    #[error("defense period must be positive, got {0}")]
    NonPositivePeriod(f64),
    #[error("period {period} outside (0, {x_max_norm}] required by the linear loss")]
    PeriodOutOfRange { period: f64, x_max_norm: f64 },
    #[error("threshold realization must be present iff a cost variant is active")]
    ThresholdMismatch,
    #[error("defense cost must be in [0, 1), got {0}")]
    BadDefenseCost(f64),
    #[error("linear loss normalizer must be positive, got {0}")]
    BadNormalizer(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Distribution of the attack time `a >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackModel {
    Weibull { scale: f64, shape: f64 },
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    /// Replay of logged attack times; CDF is the right-continuous step
    /// function of the (sorted) samples.
    Empirical { samples: Vec<f64> },
}

impl AttackModel {
    pub fn weibull(scale: f64, shape: f64) -> Result<Self, ModelError> {
        let m = AttackModel::Weibull { scale, shape };
        m.validated()
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self, ModelError> {
        let m = AttackModel::Uniform { lo, hi };
        m.validated()
    }

    pub fn exponential(rate: f64) -> Result<Self, ModelError> {
        let m = AttackModel::Exponential { rate };
        m.validated()
    }

    pub fn empirical(samples: Vec<f64>) -> Result<Self, ModelError> {
        let m = AttackModel::Empirical { samples };
        m.validated()
    }

    /// Validates parameters and normalizes internal representation
    /// (empirical samples are kept sorted). Required after deserializing.
    pub fn validated(mut self) -> Result<Self, ModelError> {
        match &mut self {
            AttackModel::Weibull { scale, shape } => {
                if !(*scale > 0.0) {
                    return Err(ModelError::NonPositive { field: "scale", value: *scale });
                }
                if !(*shape > 0.0) {
                    return Err(ModelError::NonPositive { field: "shape", value: *shape });
                }
            }
            AttackModel::Uniform { lo, hi } => {
                if !(*lo >= 0.0 && *hi > *lo) {
                    return Err(ModelError::BadUniformBounds { lo: *lo, hi: *hi });
                }
            }
            AttackModel::Exponential { rate } => {
                if !(*rate > 0.0) {
                    return Err(ModelError::NonPositive { field: "rate", value: *rate });
                }
            }
            AttackModel::Empirical { samples } => {
                if samples.is_empty() {
                    return Err(ModelError::EmptyEmpirical);
                }
                for &s in samples.iter() {
                    if !(s >= 0.0) || !s.is_finite() {
                        return Err(ModelError::BadEmpiricalSample { value: s });
                    }
                }
                samples.sort_by(f64::total_cmp);
            }
        }
        Ok(self)
    }

    /// P(A <= t).
    pub fn cdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match self {
            AttackModel::Weibull { scale, shape } => 1.0 - (-(t / scale).powf(*shape)).exp(),
            AttackModel::Uniform { lo, hi } => ((t - lo) / (hi - lo)).clamp(0.0, 1.0),
            AttackModel::Exponential { rate } => 1.0 - (-rate * t).exp(),
            AttackModel::Empirical { samples } => {
                samples.partition_point(|&s| s <= t) as f64 / samples.len() as f64
            }
        }
    }

    /// P(A < t). Differs from [`Self::cdf`] only at atoms of an empirical model.
    pub fn cdf_below(&self, t: f64) -> f64 {
        match self {
            AttackModel::Empirical { samples } => {
                if t <= 0.0 {
                    return 0.0;
                }
                samples.partition_point(|&s| s < t) as f64 / samples.len() as f64
            }
            _ => self.cdf(t),
        }
    }

    /// Inverse-transform sample from a uniform draw `u` in (0, 1].
    pub fn sample_with(&self, u: f64) -> f64 {
        debug_assert!(u > 0.0 && u <= 1.0);
        match self {
            AttackModel::Weibull { scale, shape } => scale * (-u.ln()).powf(1.0 / shape),
            AttackModel::Uniform { lo, hi } => lo + u * (hi - lo),
            AttackModel::Exponential { rate } => -u.ln() / rate,
            AttackModel::Empirical { samples } => {
                let n = samples.len();
                let idx = ((u * n as f64).ceil() as usize).clamp(1, n) - 1;
                samples[idx]
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // random::<f64>() is [0, 1); flip to (0, 1] so ln() stays finite.
        self.sample_with(1.0 - rng.random::<f64>())
    }

    /// E[(x - A)^+] = integral of P(A < u) over [0, x].
    pub fn mean_excess(&self, x: f64) -> Result<f64, QuadError> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        match self {
            AttackModel::Weibull { scale, shape } => {
                let survival = quad::adaptive_simpson(
                    |u| (-(u / scale).powf(*shape)).exp(),
                    0.0,
                    x,
                    quad::DEFAULT_ABS_TOL,
                    quad::DEFAULT_MAX_SUBDIVISIONS,
                )?;
                Ok(x - survival)
            }
            AttackModel::Uniform { lo, hi } => {
                if x <= *lo {
                    Ok(0.0)
                } else if x <= *hi {
                    Ok((x - lo) * (x - lo) / (2.0 * (hi - lo)))
                } else {
                    Ok((x - hi) + 0.5 * (hi - lo))
                }
            }
            AttackModel::Exponential { rate } => Ok(x - (1.0 - (-rate * x).exp()) / rate),
            AttackModel::Empirical { samples } => {
                let n = samples.len() as f64;
                Ok(samples.iter().map(|&s| (x - s).max(0.0)).sum::<f64>() / n)
            }
        }
    }
}

/// Shape of the attack-loss term `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossFlavor {
    /// `f(s) = 1` if the resource was compromised at all (`s > 0`), else 0.
    Binary,
    /// `f(s) = s / x_max_norm`; requires periods within `(0, x_max_norm]`.
    Linear { x_max_norm: f64 },
}

/// Attack-cost behavior: a myopic attacker with cost skips rounds whose
/// period is at most its (hidden) threshold `x0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CostVariant {
    #[default]
    None,
    /// A fixed threshold, unknown to the defender.
    Fixed { threshold: f64 },
    /// Threshold re-drawn i.i.d. every round from this distribution.
    Random { threshold_model: AttackModel },
}

impl CostVariant {
    pub fn is_active(&self) -> bool {
        !matches!(self, CostVariant::None)
    }
}

/// The defender's per-round loss definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub flavor: LossFlavor,
    pub defense_cost: f64,
    #[serde(default)]
    pub cost_variant: CostVariant,
}

impl LossSpec {
    pub fn new(flavor: LossFlavor, defense_cost: f64) -> Result<Self, LossError> {
        let spec = LossSpec { flavor, defense_cost, cost_variant: CostVariant::None };
        spec.validated()
    }

    pub fn with_cost(mut self, cost_variant: CostVariant) -> Self {
        self.cost_variant = cost_variant;
        self
    }

    pub fn validated(self) -> Result<Self, LossError> {
        if !(self.defense_cost >= 0.0 && self.defense_cost < 1.0) {
            return Err(LossError::BadDefenseCost(self.defense_cost));
        }
        if let LossFlavor::Linear { x_max_norm } = self.flavor {
            if !(x_max_norm > 0.0) {
                return Err(LossError::BadNormalizer(x_max_norm));
            }
        }
        if let CostVariant::Random { threshold_model } = &self.cost_variant {
            threshold_model.clone().validated()?;
        }
        Ok(self)
    }

    /// The attack-loss term `f(s)` for compromise duration `s >= 0`.
    pub fn attack_loss(&self, s: f64) -> f64 {
        match self.flavor {
            LossFlavor::Binary => {
                if s > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            LossFlavor::Linear { x_max_norm } => s / x_max_norm,
        }
    }

    fn check_period(&self, x: f64) -> Result<(), LossError> {
        if !(x > 0.0) {
            return Err(LossError::NonPositivePeriod(x));
        }
        if let LossFlavor::Linear { x_max_norm } = self.flavor {
            if x > x_max_norm {
                return Err(LossError::PeriodOutOfRange { period: x, x_max_norm });
            }
        }
        Ok(())
    }

    /// Realized loss of one round: `threshold` must carry the round's `x0`
    /// exactly when a cost variant is active.
    pub fn round_loss(&self, x: f64, a: f64, threshold: Option<f64>) -> Result<f64, LossError> {
        self.check_period(x)?;
        if threshold.is_some() != self.cost_variant.is_active() {
            return Err(LossError::ThresholdMismatch);
        }
        if let Some(x0) = threshold {
            if x <= x0 {
                return Ok(self.defense_cost);
            }
        }
        Ok(self.attack_loss((x - a).max(0.0)) + self.defense_cost)
    }

    /// Expected loss `l(x)` under `model`, exact up to quadrature tolerance.
    pub fn expected_loss(&self, model: &AttackModel, x: f64) -> Result<f64, LossError> {
        self.check_period(x)?;
        let base = self.expected_attack_loss(model, x)? + self.defense_cost;
        match &self.cost_variant {
            CostVariant::None => Ok(base),
            CostVariant::Fixed { threshold } => {
                if x <= *threshold {
                    Ok(self.defense_cost)
                } else {
                    Ok(base)
                }
            }
            CostVariant::Random { threshold_model } => {
                // Attack happens iff x0 < x.
                let p_attack = threshold_model.cdf_below(x);
                Ok(self.defense_cost + p_attack * (base - self.defense_cost))
            }
        }
    }

    /// E[f((x - A)^+)] ignoring any cost variant.
    fn expected_attack_loss(&self, model: &AttackModel, x: f64) -> Result<f64, LossError> {
        match self.flavor {
            // Ties (a == x) leave the resource uncompromised, so the binary
            // term integrates to P(A < x).
            LossFlavor::Binary => Ok(model.cdf_below(x)),
            LossFlavor::Linear { x_max_norm } => Ok(model.mean_excess(x)? / x_max_norm),
        }
    }
}
