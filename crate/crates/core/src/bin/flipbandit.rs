//! Command-line driver for the timing-game experiments.
//!
//! Exit codes: 0 success, 2 config/usage error, 3 runtime failure,
//! 4 replay mismatch, 1 theorem-check bound violation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use flipbandit::attack::{CostVariant, LossFlavor, LossSpec};
use flipbandit::harness::{
    run_experiment, ExperimentConfig, ModelConfig, PeriodsConfig, PolicyId, TraceDetail,
};
use flipbandit::oracle::{build_table, lipschitz_constants};
use flipbandit::output::{oracle_csv, replay_dir, write_run, ReplayError};
use flipbandit::policy::{cube_root_ceil, stage_gamma};
use flipbandit::report::{continuous_bound, finite_arm_bound, theorem_report, BoundCheck, BoundKind};

#[derive(Parser)]
#[command(name = "flipbandit", version, about = "Timing-game bandit experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Overrides {
    /// Base seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Trial-count override.
    #[arg(long)]
    trials: Option<u64>,
    /// Horizon override.
    #[arg(long)]
    horizon: Option<u64>,
    /// Comma-separated policy list override.
    #[arg(long)]
    policies: Option<String>,
    /// Worker thread count (defaults to available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write per-round game logs (rounds-*.csv/json).
        #[arg(long)]
        emit_rounds: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Reproduce the four-policy comparison (binary and linear losses).
    ReproduceFig2 {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Dump the oracle table (period, l, lambda, gap) for a config.
    OracleDump {
        #[arg(long)]
        config: PathBuf,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare measured mean regret against the regret-bound values.
    TheoremCheck {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Verify a run directory against its manifest.
    Replay {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn apply_overrides(cfg: &mut ExperimentConfig, ov: &Overrides) -> Result<(), String> {
    if let Some(seed) = ov.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = ov.trials {
        cfg.trials = trials;
    }
    if let Some(horizon) = ov.horizon {
        cfg.horizon = horizon;
    }
    if let Some(policies) = &ov.policies {
        let mut parsed = Vec::new();
        for name in policies.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            parsed.push(
                PolicyId::parse(name)
                    .ok_or_else(|| format!("policies: unknown policy '{name}'"))?,
            );
        }
        cfg.policies = parsed;
    }
    Ok(())
}

fn setup_jobs(ov: &Overrides) {
    #[cfg(feature = "parallel")]
    if let Some(jobs) = ov.jobs {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = ov;
}

fn load_config(path: &Path, ov: &Overrides) -> Result<ExperimentConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("config: cannot read {}: {e}", path.display()))?;
    let mut cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| format!("config: malformed JSON: {e}"))?;
    apply_overrides(&mut cfg, ov)?;
    let errs = cfg.validation_errors();
    if !errs.is_empty() {
        return Err(errs.join("\n"));
    }
    Ok(cfg)
}

/// The comparison protocol: Weibull attack times with shape 2 and scale
/// drawn uniformly from [1, 20] per trial, 19 periods evenly spaced in
/// [1, 10], defense cost 0.1, four policies on paired streams.
fn fig2_config(flavor: LossFlavor) -> ExperimentConfig {
    ExperimentConfig {
        model: ModelConfig::Weibull { scale: None, scale_range: Some([1.0, 20.0]), shape: 2.0 },
        loss: LossSpec { flavor, defense_cost: 0.1, cost_variant: CostVariant::None },
        periods: PeriodsConfig::Grid { lo: 1.0, hi: 10.0, count: 19 },
        policies: vec![
            PolicyId::ElimAggressive,
            PolicyId::Elim,
            PolicyId::TucbSide,
            PolicyId::Tucb,
        ],
        horizon: 10_000,
        trials: 100,
        seed: 1,
        nodes: 1,
    }
}

fn cmd_run(config: &Path, out: &Path, emit_rounds: bool, ov: &Overrides) -> Result<ExitCode> {
    let cfg = match load_config(config, ov) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("{msg}");
            return Ok(ExitCode::from(2));
        }
    };
    setup_jobs(ov);
    let files = write_run(out, &cfg, emit_rounds).context("run failed")?;
    println!("wrote {} files to {}", files.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_reproduce_fig2(out: &Path, ov: &Overrides) -> Result<ExitCode> {
    setup_jobs(ov);
    for (tag, flavor) in [
        ("binary", LossFlavor::Binary),
        ("linear", LossFlavor::Linear { x_max_norm: 10.0 }),
    ] {
        let mut cfg = fig2_config(flavor);
        if let Err(msg) = apply_overrides(&mut cfg, ov) {
            eprintln!("{msg}");
            return Ok(ExitCode::from(2));
        }
        let errs = cfg.validation_errors();
        if !errs.is_empty() {
            eprintln!("{}", errs.join("\n"));
            return Ok(ExitCode::from(2));
        }
        let dir = out.join(format!("fig2-{tag}"));
        write_run(&dir, &cfg, false).with_context(|| format!("{tag} run failed"))?;
        let agg = fs::read_to_string(dir.join("aggregate.csv"))?;
        fs::write(out.join(format!("fig2-{tag}.csv")), agg)?;
        println!("fig2-{tag}.csv written");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle_dump(config: &Path, out: Option<&Path>) -> Result<ExitCode> {
    let cfg = match load_config(config, &Overrides { seed: None, trials: None, horizon: None, policies: None, jobs: None }) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("{msg}");
            return Ok(ExitCode::from(2));
        }
    };
    // Table for trial 0's drawn model.
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let model = cfg.model.draw(&mut rng);
    let table = build_table(&cfg.loss, &model, &cfg.periods.expand(cfg.horizon))
        .context("oracle evaluation failed")?;
    let csv = oracle_csv(&table);
    match out {
        Some(path) => fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_theorem_check(ov: &Overrides) -> Result<ExitCode> {
    setup_jobs(ov);
    let trials = ov.trials.unwrap_or(20);
    let horizon = ov.horizon.unwrap_or(10_000);
    let seed = ov.seed.unwrap_or(1);
    let mut checks: Vec<BoundCheck> = Vec::new();

    // Finite-arm bound on fixed Weibull scales.
    for k in 1..=10u64 {
        let scale = 2.0 * k as f64;
        let cfg = ExperimentConfig {
            model: ModelConfig::Weibull { scale: Some(scale), scale_range: None, shape: 2.0 },
            loss: LossSpec::new(LossFlavor::Binary, 0.1).unwrap(),
            periods: PeriodsConfig::Grid { lo: 1.0, hi: 10.0, count: 19 },
            policies: vec![PolicyId::Elim],
            horizon,
            trials,
            seed,
            nodes: 1,
        };
        let out = run_experiment(&cfg, TraceDetail::Checkpoints)?;
        let measured = out.mean_final_regret(PolicyId::Elim);
        let table = &out.trials[0].table;
        let bound = finite_arm_bound(stage_gamma(1.0, 10.0), table, horizon, 19);
        checks.push(BoundCheck::new(format!("finite-arm weibull scale={scale}"), bound, measured));
    }

    // Continuous bound on the uniform instance.
    {
        let cfg = ExperimentConfig {
            model: ModelConfig::Uniform { lo: 1.0, hi: 3.0 },
            loss: LossSpec::new(LossFlavor::Binary, 0.1).unwrap(),
            periods: PeriodsConfig::Continuous { lo: 1.0, hi: 10.0 },
            policies: vec![PolicyId::ElimContinuous],
            horizon,
            trials,
            seed,
            nodes: 1,
        };
        let out = run_experiment(&cfg, TraceDetail::Checkpoints)?;
        let measured = out.mean_final_regret(PolicyId::ElimContinuous);
        let spec = &cfg.loss;
        let model = flipbandit::attack::AttackModel::uniform(1.0, 3.0).unwrap();
        let (_, l_prime) = lipschitz_constants(spec, &model, 1.0, 10.0)?;
        let n = cube_root_ceil(horizon);
        let bound = continuous_bound(
            l_prime,
            n,
            horizon,
            stage_gamma(1.0, 10.0),
            out.trials[0].table.gap_max,
        );
        checks.push(BoundCheck::new("continuous uniform(1,3)", bound, measured));
    }

    // Fixed-attack-cost bound.
    {
        let threshold = 3.2;
        let cfg = ExperimentConfig {
            model: ModelConfig::Weibull { scale: None, scale_range: Some([1.0, 20.0]), shape: 2.0 },
            loss: LossSpec::new(LossFlavor::Binary, 0.1)
                .unwrap()
                .with_cost(CostVariant::Fixed { threshold }),
            periods: PeriodsConfig::Grid { lo: 1.0, hi: 10.0, count: 19 },
            policies: vec![PolicyId::ElimFixedCost],
            horizon,
            trials,
            seed,
            nodes: 1,
        };
        let out = run_experiment(&cfg, TraceDetail::Checkpoints)?;
        // Bound is per instance; report the trial with the worst margin.
        let per_trial = theorem_report(&out, &BoundKind::FixedCost { threshold });
        let worst = per_trial
            .into_iter()
            .min_by(|a, b| (a.bound - a.measured).total_cmp(&(b.bound - b.measured)))
            .unwrap();
        checks.push(BoundCheck::new(
            format!("fixed-cost x0={threshold} ({})", worst.label),
            worst.bound,
            worst.measured,
        ));
    }

    let mut all_hold = true;
    println!("{:<40} {:>16} {:>16}  status", "instance", "bound", "measured");
    for c in &checks {
        println!(
            "{:<40} {:>16.2} {:>16.2}  {}",
            c.label,
            c.bound,
            c.measured,
            if c.holds { "ok" } else { "VIOLATED" }
        );
        all_hold &= c.holds;
    }
    Ok(if all_hold { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_replay(dir: &Path) -> ExitCode {
    match replay_dir(dir) {
        Ok(report) => {
            println!(
                "verified: {} files checked, {} rounds recomputed",
                report.files_checked, report.rounds_recomputed
            );
            ExitCode::SUCCESS
        }
        Err(e @ ReplayError::Mismatch { .. }) => {
            eprintln!("{e}");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(3)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Run { config, out, emit_rounds, overrides } => {
            cmd_run(config, out, *emit_rounds, overrides)
        }
        Cmd::ReproduceFig2 { out, overrides } => cmd_reproduce_fig2(out, overrides),
        Cmd::OracleDump { config, out } => cmd_oracle_dump(config, out.as_deref()),
        Cmd::TheoremCheck { overrides } => cmd_theorem_check(overrides),
        Cmd::Replay { dir } => return cmd_replay(dir),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
