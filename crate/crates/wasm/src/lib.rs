//! Browser bindings: three JSON-in/JSON-out operations backing the demo
//! page. Everything is seeded explicitly, so the page is deterministic and
//! needs no browser randomness.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use flipbandit::attack::LossSpec;
use flipbandit::harness::{
    run_experiment, ExperimentConfig, ModelConfig, PolicyId, TraceDetail,
};
use flipbandit::oracle::{build_table, continuum_lambda_star};

fn err_json(msg: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": msg.to_string() }).to_string()
}

#[derive(Deserialize)]
struct CurveRequest {
    model: ModelConfig,
    loss: LossSpec,
    x_min: f64,
    x_max: f64,
    #[serde(default = "default_points")]
    points: usize,
    #[serde(default)]
    seed: u64,
}

fn default_points() -> usize {
    400
}

#[derive(Serialize)]
struct CurveResponse {
    x: Vec<f64>,
    expected_loss: Vec<f64>,
    lambda: Vec<f64>,
    gap: Vec<f64>,
    x_star: f64,
    lambda_star: f64,
}

/// Expected loss l(x), time-average loss lambda(x) and relative gap over a
/// dense grid, plus the continuum optimum. `seed` only matters when the
/// model draws a per-trial parameter.
#[wasm_bindgen]
pub fn oracle_curve(request_json: &str) -> String {
    let req: CurveRequest = match serde_json::from_str(request_json) {
        Ok(r) => r,
        Err(e) => return err_json(e),
    };
    if !(req.x_min > 0.0 && req.x_max > req.x_min) || req.points < 2 {
        return err_json("need 0 < x_min < x_max and points >= 2");
    }
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(req.seed);
    let model = req.model.draw(&mut rng);
    let points = req.points.min(20_000);
    let grid: Vec<f64> = (0..points)
        .map(|k| req.x_min + (k as f64 / (points as f64 - 1.0)) * (req.x_max - req.x_min))
        .collect();
    let table = match build_table(&req.loss, &model, &grid) {
        Ok(t) => t,
        Err(e) => return err_json(e),
    };
    let (x_star, lambda_star) =
        match continuum_lambda_star(&req.loss, &model, req.x_min, req.x_max) {
            Ok(v) => v,
            Err(e) => return err_json(e),
        };
    let gap = table
        .expected
        .iter()
        .zip(&table.periods)
        .map(|(l, x)| l - x * lambda_star)
        .collect();
    serde_json::to_string(&CurveResponse {
        x: table.periods.clone(),
        expected_loss: table.expected.clone(),
        lambda: table.lambda.clone(),
        gap,
        x_star,
        lambda_star,
    })
    .unwrap_or_else(err_json)
}

#[derive(Deserialize)]
struct TrialRequest {
    config: ExperimentConfig,
    policy: PolicyId,
    #[serde(default = "default_curve_points")]
    curve_points: usize,
}

fn default_curve_points() -> usize {
    500
}

#[derive(Serialize)]
struct TrialResponse {
    rounds: Vec<u64>,
    cum_regret: Vec<f64>,
    periods: Vec<f64>,
    play_counts: Vec<u64>,
    final_regret: f64,
    x_star: f64,
    lambda_star: f64,
}

/// One seeded trial of one policy: downsampled cumulative-regret curve and
/// the play histogram over candidate periods.
#[wasm_bindgen]
pub fn simulate_trial(request_json: &str) -> String {
    let req: TrialRequest = match serde_json::from_str(request_json) {
        Ok(r) => r,
        Err(e) => return err_json(e),
    };
    let mut cfg = req.config;
    cfg.trials = 1;
    cfg.policies = vec![req.policy];
    let out = match run_experiment(&cfg, TraceDetail::Full) {
        Ok(o) => o,
        Err(e) => return err_json(e),
    };
    let trial = &out.trials[0];
    let trace = &trial.runs[0].trace;
    let stride = (trace.rows.len() / req.curve_points.clamp(10, 5_000)).max(1);
    let mut rounds = Vec::new();
    let mut cum = Vec::new();
    for row in trace.rows.iter().step_by(stride) {
        rounds.push(row.round);
        cum.push(row.cum_regret);
    }
    if let Some(last) = trace.rows.last() {
        if rounds.last() != Some(&last.round) {
            rounds.push(last.round);
            cum.push(last.cum_regret);
        }
    }
    serde_json::to_string(&TrialResponse {
        rounds,
        cum_regret: cum,
        periods: trial.table.periods.clone(),
        play_counts: trace.play_counts.clone(),
        final_regret: trace.final_regret,
        x_star: trial.table.x_star,
        lambda_star: trial.table.lambda_star,
    })
    .unwrap_or_else(err_json)
}

#[derive(Serialize)]
struct CompareCurve {
    policy: String,
    rounds: Vec<u64>,
    mean: Vec<f64>,
    stderr: Vec<f64>,
}

#[derive(Serialize)]
struct CompareResponse {
    curves: Vec<CompareCurve>,
}

/// Mean regret curves (checkpoint-sampled) for every policy in the config,
/// on paired attack streams.
#[wasm_bindgen]
pub fn compare_policies(config_json: &str) -> String {
    let cfg: ExperimentConfig = match serde_json::from_str(config_json) {
        Ok(c) => c,
        Err(e) => return err_json(e),
    };
    if cfg.trials.saturating_mul(cfg.horizon) > 20_000_000 {
        return err_json("demo budget: trials * horizon must stay below 2e7");
    }
    let out = match run_experiment(&cfg, TraceDetail::Checkpoints) {
        Ok(o) => o,
        Err(e) => return err_json(e),
    };
    let mut curves = Vec::new();
    for &pid in &out.config.policies {
        let traces = out.traces_for(pid);
        let agg = match flipbandit::harness::aggregate(&traces) {
            Ok(a) => a,
            Err(e) => return err_json(e),
        };
        curves.push(CompareCurve {
            policy: pid.name().to_string(),
            rounds: agg.iter().map(|p| p.round).collect(),
            mean: agg.iter().map(|p| p.mean).collect(),
            stderr: agg.iter().map(|p| p.stderr).collect(),
        });
    }
    serde_json::to_string(&CompareResponse { curves }).unwrap_or_else(err_json)
}
