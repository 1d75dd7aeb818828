//! Seeded multi-trial experiments.
//!
//! Trial `t` uses seed `base_seed + t`. Within a trial every policy faces
//! the identical attack-time stream (common random numbers), indexed by
//! round resolution order, so policy comparisons are paired. Trials run
//! concurrently; everything is deterministic given the config.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attack::{AttackModel, CostVariant, LossFlavor, LossSpec};
use crate::env::{AttackStream, Environment, EnvError, GameTrace};
use crate::oracle::{build_table, continuum_lambda_star, OracleError, OracleTable};
use crate::policy::{
    cube_root_ceil, right_endpoint_grid, EliminationPolicy, ElimRule, FixedCostPolicy, Policy,
    RandomCostPolicy, StageRecord, TimeUcbPolicy,
};
use crate::report;
use crate::trace::{checkpoint_rounds, RegretTrace, RoundRow, TraceMeta};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config:\n{}", .0.join("\n"))]
    InvalidConfig(Vec<String>),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("traces disagree on horizon: {0} vs {1}")]
    MismatchedHorizons(u64, u64),
    #[error("cannot aggregate an empty trace set")]
    NoTraces,
}

/// Attack-model configuration; scale may be drawn per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelConfig {
    Weibull {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scale: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scale_range: Option<[f64; 2]>,
        shape: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    Exponential {
        rate: f64,
    },
    Empirical {
        samples: Vec<f64>,
    },
}

impl ModelConfig {
    fn validate(&self, errs: &mut Vec<String>) {
        match self {
            ModelConfig::Weibull { scale, scale_range, shape } => {
                match (scale, scale_range) {
                    (None, None) => errs.push("model.scale: one of scale or scale_range required".into()),
                    (Some(_), Some(_)) => {
                        errs.push("model.scale: scale and scale_range are mutually exclusive".into())
                    }
                    (Some(s), None) if !(*s > 0.0) => {
                        errs.push(format!("model.scale: must be positive, got {s}"))
                    }
                    (None, Some([lo, hi])) if !(*lo > 0.0 && hi > lo) => {
                        errs.push(format!("model.scale_range: need 0 < lo < hi, got [{lo}, {hi}]"))
                    }
                    _ => {}
                }
                if !(*shape > 0.0) {
                    errs.push(format!("model.shape: must be positive, got {shape}"));
                }
            }
            ModelConfig::Uniform { lo, hi } => {
                if !(*lo >= 0.0 && hi > lo) {
                    errs.push(format!("model: uniform needs 0 <= lo < hi, got [{lo}, {hi}]"));
                }
            }
            ModelConfig::Exponential { rate } => {
                if !(*rate > 0.0) {
                    errs.push(format!("model.rate: must be positive, got {rate}"));
                }
            }
            ModelConfig::Empirical { samples } => {
                if samples.is_empty() {
                    errs.push("model.samples: must be non-empty".into());
                }
                if samples.iter().any(|&s| !(s >= 0.0) || !s.is_finite()) {
                    errs.push("model.samples: all samples must be finite and non-negative".into());
                }
            }
        }
    }

    /// Instantiate this trial's model, drawing ranged parameters.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> AttackModel {
        match self {
            ModelConfig::Weibull { scale, scale_range, shape } => {
                let s = match (scale, scale_range) {
                    (Some(s), _) => *s,
                    (None, Some([lo, hi])) => lo + (hi - lo) * rng.random::<f64>(),
                    (None, None) => unreachable!("validated"),
                };
                AttackModel::Weibull { scale: s, shape: *shape }
            }
            ModelConfig::Uniform { lo, hi } => AttackModel::Uniform { lo: *lo, hi: *hi },
            ModelConfig::Exponential { rate } => AttackModel::Exponential { rate: *rate },
            ModelConfig::Empirical { samples } => {
                AttackModel::empirical(samples.clone()).expect("validated")
            }
        }
    }
}

/// Candidate defense periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PeriodsConfig {
    /// Explicit list.
    List { values: Vec<f64> },
    /// `count` evenly spaced periods including both endpoints.
    Grid { lo: f64, hi: f64, count: usize },
    /// Continuous interval; learners discretize per their own rule.
    Continuous { lo: f64, hi: f64 },
}

impl PeriodsConfig {
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            PeriodsConfig::List { values } => {
                let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
            PeriodsConfig::Grid { lo, hi, .. } | PeriodsConfig::Continuous { lo, hi } => (*lo, *hi),
        }
    }

    /// The arm set used for oracle tables and finite learners. Continuous
    /// configs discretize with the cube-root rule at the given horizon.
    pub fn expand(&self, horizon: u64) -> Vec<f64> {
        match self {
            PeriodsConfig::List { values } => {
                let mut v = values.clone();
                v.sort_by(f64::total_cmp);
                v
            }
            PeriodsConfig::Grid { lo, hi, count } => {
                if *count == 1 {
                    vec![*lo]
                } else {
                    (0..*count)
                        .map(|k| lo + (k as f64 / (*count as f64 - 1.0)) * (hi - lo))
                        .collect()
                }
            }
            PeriodsConfig::Continuous { lo, hi } => {
                right_endpoint_grid(*lo, *hi, cube_root_ceil(horizon))
            }
        }
    }

    fn validate(&self, errs: &mut Vec<String>) {
        match self {
            PeriodsConfig::List { values } => {
                if values.is_empty() {
                    errs.push("periods.values: must be non-empty".into());
                }
                if values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                    errs.push("periods.values: all periods must be positive and finite".into());
                }
            }
            PeriodsConfig::Grid { lo, hi, count } => {
                if !(*lo > 0.0 && hi >= lo) {
                    errs.push(format!("periods: grid needs 0 < lo <= hi, got [{lo}, {hi}]"));
                }
                if *count == 0 {
                    errs.push("periods.count: must be >= 1".into());
                }
            }
            PeriodsConfig::Continuous { lo, hi } => {
                if !(*lo > 0.0 && hi > lo) {
                    errs.push(format!("periods: continuous needs 0 < lo < hi, got [{lo}, {hi}]"));
                }
            }
        }
    }
}

/// Selectable learners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyId {
    Elim,
    ElimAggressive,
    ElimContinuous,
    ElimFixedCost,
    ElimRandomCost,
    Tucb,
    TucbSide,
}

impl PolicyId {
    pub const ALL: [PolicyId; 7] = [
        PolicyId::Elim,
        PolicyId::ElimAggressive,
        PolicyId::ElimContinuous,
        PolicyId::ElimFixedCost,
        PolicyId::ElimRandomCost,
        PolicyId::Tucb,
        PolicyId::TucbSide,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyId::Elim => "elim",
            PolicyId::ElimAggressive => "elim-aggressive",
            PolicyId::ElimContinuous => "elim-continuous",
            PolicyId::ElimFixedCost => "elim-fixed-cost",
            PolicyId::ElimRandomCost => "elim-random-cost",
            PolicyId::Tucb => "tucb",
            PolicyId::TucbSide => "tucb-side",
        }
    }

    pub fn parse(s: &str) -> Option<PolicyId> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    pub fn build(
        self,
        spec: &LossSpec,
        periods: &PeriodsConfig,
        horizon: u64,
    ) -> Box<dyn Policy + Send> {
        let arms = periods.expand(horizon);
        match self {
            PolicyId::Elim => Box::new(EliminationPolicy::new(
                spec.clone(),
                arms,
                horizon,
                ElimRule::Standard,
            )),
            PolicyId::ElimAggressive => Box::new(EliminationPolicy::new(
                spec.clone(),
                arms,
                horizon,
                ElimRule::Aggressive,
            )),
            PolicyId::ElimContinuous => {
                let (lo, hi) = periods.bounds();
                Box::new(EliminationPolicy::continuous(
                    spec.clone(),
                    lo,
                    hi,
                    horizon,
                    ElimRule::Standard,
                ))
            }
            PolicyId::ElimFixedCost => {
                Box::new(FixedCostPolicy::new(spec.clone(), arms, horizon))
            }
            PolicyId::ElimRandomCost => {
                Box::new(RandomCostPolicy::new(spec.clone(), arms, horizon))
            }
            PolicyId::Tucb => Box::new(TimeUcbPolicy::new(spec.clone(), arms, false)),
            PolicyId::TucbSide => Box::new(TimeUcbPolicy::new(spec.clone(), arms, true)),
        }
    }
}

fn default_nodes() -> usize {
    1
}

/// Full experiment description; the JSON config file is exactly this shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub loss: LossSpec,
    pub periods: PeriodsConfig,
    pub policies: Vec<PolicyId>,
    pub horizon: u64,
    pub trials: u64,
    pub seed: u64,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
}

impl ExperimentConfig {
    /// All validation failures, each prefixed with its field path.
    pub fn validation_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        self.model.validate(&mut errs);
        self.periods.validate(&mut errs);
        if self.trials < 1 {
            errs.push("trials: must be >= 1".into());
        }
        if self.horizon < 1 {
            errs.push("horizon: must be >= 1".into());
        }
        if self.nodes < 1 {
            errs.push("nodes: must be >= 1".into());
        }
        if self.policies.is_empty() {
            errs.push("policies: must name at least one policy".into());
        }
        if !(self.loss.defense_cost >= 0.0 && self.loss.defense_cost < 1.0) {
            errs.push(format!(
                "loss.defense_cost: must be in [0, 1), got {}",
                self.loss.defense_cost
            ));
        }
        if let LossFlavor::Linear { x_max_norm } = self.loss.flavor {
            if !(x_max_norm > 0.0) {
                errs.push(format!("loss.flavor.x_max_norm: must be positive, got {x_max_norm}"));
            } else {
                let (_, hi) = self.periods.bounds();
                if hi > x_max_norm {
                    errs.push(format!(
                        "periods: longest period {hi} exceeds loss.flavor.x_max_norm {x_max_norm}"
                    ));
                }
            }
        }
        if let CostVariant::Random { threshold_model } = &self.loss.cost_variant {
            if threshold_model.clone().validated().is_err() {
                errs.push("loss.cost_variant.threshold_model: invalid distribution".into());
            }
        }
        for p in &self.policies {
            match p {
                PolicyId::ElimFixedCost => {
                    if !matches!(self.loss.cost_variant, CostVariant::Fixed { .. }) {
                        errs.push("policies: elim-fixed-cost requires loss.cost_variant = fixed".into());
                    }
                }
                PolicyId::ElimRandomCost => {
                    if !matches!(self.loss.cost_variant, CostVariant::Random { .. }) {
                        errs.push("policies: elim-random-cost requires loss.cost_variant = random".into());
                    }
                }
                PolicyId::Elim | PolicyId::ElimAggressive | PolicyId::ElimContinuous => {
                    if self.loss.cost_variant.is_active() {
                        errs.push(format!(
                            "policies: {} requires loss.cost_variant = none (its side observations assume cost-free attacks)",
                            p.name()
                        ));
                    }
                }
                PolicyId::Tucb | PolicyId::TucbSide => {}
            }
            if matches!(p, PolicyId::ElimContinuous)
                != matches!(self.periods, PeriodsConfig::Continuous { .. })
            {
                errs.push(format!(
                    "policies: {} and periods.mode = continuous must be used together",
                    p.name()
                ));
            }
        }
        errs
    }

    pub fn validated(self) -> Result<Self, HarnessError> {
        let errs = self.validation_errors();
        if errs.is_empty() {
            Ok(self)
        } else {
            Err(HarnessError::InvalidConfig(errs))
        }
    }
}

/// Whether full per-round rows and game logs are retained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceDetail {
    Checkpoints,
    Full,
}

/// One policy's result on one trial.
pub struct PolicyRun {
    pub trace: RegretTrace,
    /// Present when full detail was requested.
    pub game: Option<GameTrace>,
    pub stage_log: Vec<StageRecord>,
}

pub struct TrialOutput {
    pub trial: u64,
    pub seed: u64,
    pub model: AttackModel,
    pub table: OracleTable,
    /// Continuum optimum, used as the regret baseline for continuous runs.
    pub lambda_star_continuum: Option<f64>,
    pub runs: Vec<PolicyRun>,
}

pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub checkpoint_rounds: Vec<u64>,
    pub trials: Vec<TrialOutput>,
}

impl ExperimentOutput {
    /// Traces of one policy across trials, in trial order.
    pub fn traces_for(&self, policy: PolicyId) -> Vec<&RegretTrace> {
        self.trials
            .iter()
            .flat_map(|t| t.runs.iter())
            .filter(|r| r.trace.meta.policy == policy.name())
            .map(|r| &r.trace)
            .collect()
    }

    pub fn mean_final_regret(&self, policy: PolicyId) -> f64 {
        let traces = self.traces_for(policy);
        traces.iter().map(|t| t.final_regret).sum::<f64>() / traces.len() as f64
    }
}

fn trace_meta(
    policy: &str,
    trial: u64,
    seed: u64,
    table: &OracleTable,
    model: &AttackModel,
    horizon: u64,
    lambda_star: f64,
) -> TraceMeta {
    let arms = table.periods.len();
    let x_min = table.periods.first().copied().unwrap();
    let x_max = table.periods.last().copied().unwrap();
    let gamma = crate::policy::stage_gamma(x_min, x_max);
    TraceMeta {
        policy: policy.to_string(),
        trial,
        seed,
        oracle_digest: table.digest(),
        gamma,
        gap_min: table.gap_min_positive,
        gap_max: table.gap_max,
        b_values: table
            .gaps
            .iter()
            .map(|&g| report::b_constant(gamma, g, horizon, arms))
            .collect(),
        p_values: table.periods.iter().map(|&x| model.cdf_below(x)).collect(),
        lambda_star,
    }
}

/// Drive one policy against one environment for `horizon` rounds.
#[allow(clippy::too_many_arguments)]
fn run_policy_loop(
    policy: &mut (dyn Policy + Send),
    env: &mut Environment,
    table: &OracleTable,
    lambda_star: f64,
    horizon: u64,
    checkpoints: &[u64],
    detail: TraceDetail,
    meta: TraceMeta,
) -> Result<RegretTrace, HarnessError> {
    let mut rows = Vec::new();
    if detail == TraceDetail::Full {
        rows.reserve(horizon as usize);
    }
    let mut cp = Vec::with_capacity(checkpoints.len());
    let mut cp_iter = checkpoints.iter().peekable();
    let mut cum = 0.0;
    let mut cum_realized = 0.0;
    let mut counts = vec![0u64; table.periods.len()];
    for round in 1..=horizon {
        let x = policy.next_period();
        let rec = env.play_round(0, x)?;
        policy.observe(&rec);
        let idx = table
            .index_of(x)
            .ok_or(OracleError::UnknownPeriod(x))?;
        counts[idx] += 1;
        cum += table.expected[idx] - lambda_star * x;
        cum_realized += rec.loss - lambda_star * x;
        if detail == TraceDetail::Full {
            rows.push(RoundRow {
                round,
                period: x,
                loss: rec.loss,
                expected: table.expected[idx],
                cum_regret: cum,
            });
        }
        if cp_iter.peek() == Some(&&round) {
            cp.push(RoundRow {
                round,
                period: x,
                loss: rec.loss,
                expected: table.expected[idx],
                cum_regret: cum,
            });
            cp_iter.next();
        }
    }
    Ok(RegretTrace {
        meta,
        horizon,
        rows,
        checkpoints: cp,
        final_regret: cum,
        final_realized_regret: cum_realized,
        play_counts: counts,
    })
}

fn run_trial(
    cfg: &ExperimentConfig,
    trial: u64,
    detail: TraceDetail,
    checkpoints: &[u64],
) -> Result<TrialOutput, HarnessError> {
    let seed = cfg.seed.wrapping_add(trial);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = cfg.model.draw(&mut rng);
    let stream = AttackStream::generate(&model, &cfg.loss, cfg.horizon as usize, &mut rng);

    let arms = cfg.periods.expand(cfg.horizon);
    let table = build_table(&cfg.loss, &model, &arms)?;
    let continuous = matches!(cfg.periods, PeriodsConfig::Continuous { .. });
    let lambda_star_continuum = if continuous {
        let (lo, hi) = cfg.periods.bounds();
        Some(continuum_lambda_star(&cfg.loss, &model, lo, hi)?.1)
    } else {
        None
    };
    let lambda_star = lambda_star_continuum.unwrap_or(table.lambda_star);

    let (x_min, x_max) = cfg.periods.bounds();
    let mut runs = Vec::with_capacity(cfg.policies.len());
    for &pid in &cfg.policies {
        let mut env = Environment::new(cfg.loss.clone(), x_min, x_max, 1, stream.clone(), seed);
        let mut policy = pid.build(&cfg.loss, &cfg.periods, cfg.horizon);
        let meta = trace_meta(pid.name(), trial, seed, &table, &model, cfg.horizon, lambda_star);
        let trace = run_policy_loop(
            policy.as_mut(),
            &mut env,
            &table,
            lambda_star,
            cfg.horizon,
            checkpoints,
            detail,
            meta,
        )?;
        runs.push(PolicyRun {
            trace,
            game: (detail == TraceDetail::Full).then(|| env.into_trace()),
            stage_log: policy.stage_log().to_vec(),
        });
    }
    Ok(TrialOutput { trial, seed, model, table, lambda_star_continuum, runs })
}

/// Run every (trial, policy) combination of the config.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    detail: TraceDetail,
) -> Result<ExperimentOutput, HarnessError> {
    let cfg = cfg.clone().validated()?;
    if cfg.nodes > 1 {
        return run_multinode(&cfg, detail);
    }
    let checkpoints = checkpoint_rounds(cfg.horizon);
    let trials: Result<Vec<TrialOutput>, HarnessError> = {
        #[cfg(feature = "parallel")]
        {
            (0..cfg.trials)
                .into_par_iter()
                .map(|t| run_trial(&cfg, t, detail, &checkpoints))
                .collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..cfg.trials)
                .map(|t| run_trial(&cfg, t, detail, &checkpoints))
                .collect()
        }
    };
    Ok(ExperimentOutput { config: cfg, checkpoint_rounds: checkpoints, trials: trials? })
}

/// Event-driven multi-node run: one shared policy per configured learner,
/// nodes advancing by earliest round-end wall time (ties by node id), arm
/// statistics updated from feedback in pooled wall-time order. The attack
/// stream is consumed in resolution order, so an N=1 multi-node run is
/// identical to the single-node path round for round.
pub fn run_multinode(
    cfg: &ExperimentConfig,
    detail: TraceDetail,
) -> Result<ExperimentOutput, HarnessError> {
    let cfg = cfg.clone().validated()?;
    let checkpoints = checkpoint_rounds(cfg.horizon);
    let run_one = |trial: u64| -> Result<TrialOutput, HarnessError> {
        let seed = cfg.seed.wrapping_add(trial);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = cfg.model.draw(&mut rng);
        let stream = AttackStream::generate(&model, &cfg.loss, cfg.horizon as usize, &mut rng);
        let arms = cfg.periods.expand(cfg.horizon);
        let table = build_table(&cfg.loss, &model, &arms)?;
        let lambda_star = table.lambda_star;
        let (x_min, x_max) = cfg.periods.bounds();

        let mut runs = Vec::with_capacity(cfg.policies.len());
        for &pid in &cfg.policies {
            let mut env =
                Environment::new(cfg.loss.clone(), x_min, x_max, cfg.nodes, stream.clone(), seed);
            let mut policy = pid.build(&cfg.loss, &cfg.periods, cfg.horizon);
            let meta =
                trace_meta(pid.name(), trial, seed, &table, &model, cfg.horizon, lambda_star);

            // (end_time, node, period) of in-flight rounds.
            let mut in_flight: Vec<(f64, usize, f64)> = Vec::with_capacity(cfg.nodes);
            let mut issued = 0u64;
            for node in 0..cfg.nodes {
                if issued >= cfg.horizon {
                    break;
                }
                let x = policy.next_period();
                in_flight.push((env.node_time(node) + x, node, x));
                issued += 1;
            }
            let mut delivered = 0u64;
            let mut cum = 0.0;
            let mut cum_realized = 0.0;
            let mut counts = vec![0u64; table.periods.len()];
            let mut rows = Vec::new();
            let mut cp = Vec::with_capacity(checkpoints.len());
            let mut cp_iter = checkpoints.iter().peekable();
            while !in_flight.is_empty() {
                // Earliest end time, ties by node id.
                let mut best = 0usize;
                for i in 1..in_flight.len() {
                    let (ei, ni, _) = in_flight[i];
                    let (eb, nb, _) = in_flight[best];
                    if ei < eb || (ei == eb && ni < nb) {
                        best = i;
                    }
                }
                let (end, node, x) = in_flight.swap_remove(best);
                let rec = env.play_round(node, x)?;
                debug_assert!((rec.end_time() - end).abs() < 1e-9);
                policy.observe(&rec);
                delivered += 1;
                let idx = table.index_of(x).ok_or(OracleError::UnknownPeriod(x))?;
                counts[idx] += 1;
                cum += table.expected[idx] - lambda_star * x;
                cum_realized += rec.loss - lambda_star * x;
                if detail == TraceDetail::Full {
                    rows.push(RoundRow {
                        round: delivered,
                        period: x,
                        loss: rec.loss,
                        expected: table.expected[idx],
                        cum_regret: cum,
                    });
                }
                if cp_iter.peek() == Some(&&delivered) {
                    cp.push(RoundRow {
                        round: delivered,
                        period: x,
                        loss: rec.loss,
                        expected: table.expected[idx],
                        cum_regret: cum,
                    });
                    cp_iter.next();
                }
                if issued < cfg.horizon {
                    let x2 = policy.next_period();
                    in_flight.push((env.node_time(node) + x2, node, x2));
                    issued += 1;
                }
            }
            runs.push(PolicyRun {
                trace: RegretTrace {
                    meta,
                    horizon: cfg.horizon,
                    rows,
                    checkpoints: cp,
                    final_regret: cum,
                    final_realized_regret: cum_realized,
                    play_counts: counts,
                },
                game: (detail == TraceDetail::Full).then(|| env.into_trace()),
                stage_log: policy.stage_log().to_vec(),
            });
        }
        Ok(TrialOutput { trial, seed, model, table, lambda_star_continuum: None, runs })
    };

    let trials: Result<Vec<TrialOutput>, HarnessError> = {
        #[cfg(feature = "parallel")]
        {
            (0..cfg.trials).into_par_iter().map(run_one).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..cfg.trials).map(run_one).collect()
        }
    };
    Ok(ExperimentOutput { config: cfg, checkpoint_rounds: checkpoints, trials: trials? })
}

/// Mean and standard error of cumulative regret at each checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggPoint {
    pub round: u64,
    pub mean: f64,
    pub stderr: f64,
}

pub fn aggregate(traces: &[&RegretTrace]) -> Result<Vec<AggPoint>, HarnessError> {
    let first = traces.first().ok_or(HarnessError::NoTraces)?;
    for t in traces {
        if t.horizon != first.horizon {
            return Err(HarnessError::MismatchedHorizons(first.horizon, t.horizon));
        }
    }
    let n = traces.len() as f64;
    let mut out = Vec::with_capacity(first.checkpoints.len());
    for (k, row) in first.checkpoints.iter().enumerate() {
        let round = row.round;
        let values: Vec<f64> = traces.iter().map(|t| t.checkpoints[k].cum_regret).collect();
        let mean = values.iter().sum::<f64>() / n;
        let stderr = if traces.len() > 1 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        out.push(AggPoint { round, mean, stderr });
    }
    Ok(out)
}
