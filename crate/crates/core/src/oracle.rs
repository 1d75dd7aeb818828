//! Ground-truth quantities available only to the evaluator: expected losses
//! per period, the optimal periodic policy, relative gaps, Lipschitz
//! constants, and pseudo-regret accounting.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attack::{AttackModel, LossError, LossFlavor, LossSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("period set must be non-empty")]
    EmptyPeriods,
    #[error("played period {0} does not appear in the oracle table")]
    UnknownPeriod(f64),
    #[error(transparent)]
    Loss(#[from] LossError),
}

/// Expected losses and gaps for a finite period set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleTable {
    pub periods: Vec<f64>,
    /// l(x) per period.
    pub expected: Vec<f64>,
    /// lambda(x) = l(x) / x per period.
    pub lambda: Vec<f64>,
    pub star_index: usize,
    pub x_star: f64,
    pub lambda_star: f64,
    /// Relative loss gap per period: l_i - x_i * lambda_star.
    pub gaps: Vec<f64>,
    /// Smallest positive gap, when any period is suboptimal.
    pub gap_min_positive: Option<f64>,
    pub gap_max: f64,
}

impl OracleTable {
    /// Index of a period, matched exactly (periods are copied around, not
    /// recomputed, so bit equality is the right notion).
    pub fn index_of(&self, period: f64) -> Option<usize> {
        self.periods.iter().position(|p| p.to_bits() == period.to_bits())
    }

    /// FNV-1a digest over the table contents; recorded in run manifests so
    /// replays can prove they used the same oracle.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: f64| {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for i in 0..self.periods.len() {
            eat(self.periods[i]);
            eat(self.expected[i]);
        }
        eat(self.lambda_star);
        h
    }
}

/// Evaluate the expected losses of every candidate period and locate the
/// optimal periodic policy; ties go to the shortest period.
pub fn build_table(
    spec: &LossSpec,
    model: &AttackModel,
    periods: &[f64],
) -> Result<OracleTable, OracleError> {
    if periods.is_empty() {
        return Err(OracleError::EmptyPeriods);
    }
    let expected: Vec<f64> = periods
        .iter()
        .map(|&x| spec.expected_loss(model, x))
        .collect::<Result<_, _>>()?;
    let lambda: Vec<f64> = expected.iter().zip(periods).map(|(l, x)| l / x).collect();

    let mut star = 0usize;
    for i in 1..periods.len() {
        let better = lambda[i] < lambda[star]
            || (lambda[i] == lambda[star] && periods[i] < periods[star]);
        if better {
            star = i;
        }
    }
    let lambda_star = lambda[star];
    let gaps: Vec<f64> = periods
        .iter()
        .zip(&expected)
        .enumerate()
        .map(|(i, (&x, &l))| if i == star { 0.0 } else { (l - x * lambda_star).max(0.0) })
        .collect();
    let gap_min_positive = gaps.iter().copied().filter(|&g| g > 0.0).reduce(f64::min);
    let gap_max = gaps.iter().copied().fold(0.0, f64::max);

    Ok(OracleTable {
        periods: periods.to_vec(),
        expected,
        lambda,
        star_index: star,
        x_star: periods[star],
        lambda_star,
        gaps,
        gap_min_positive,
        gap_max,
    })
}

/// Pseudo-regret of a play sequence, both as the per-round sum
/// `sum l(x_t) - lambda_star * sum x_t` and as the independent gap-count
/// form `sum_i gap_i * n_i`; the two must agree to fp accumulation error.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretSeries {
    pub total: f64,
    /// Cumulative pseudo-regret after each round.
    pub cumulative: Vec<f64>,
    /// Independent recomputation via per-arm play counts and gaps.
    pub by_arm_total: f64,
    /// Plays per table arm.
    pub play_counts: Vec<u64>,
}

pub fn pseudo_regret(plays: &[f64], table: &OracleTable) -> Result<RegretSeries, OracleError> {
    let index: HashMap<u64, usize> = table
        .periods
        .iter()
        .enumerate()
        .map(|(i, p)| (p.to_bits(), i))
        .collect();
    let mut cumulative = Vec::with_capacity(plays.len());
    let mut counts = vec![0u64; table.periods.len()];
    let mut acc = 0.0;
    for &x in plays {
        let i = *index
            .get(&x.to_bits())
            .ok_or(OracleError::UnknownPeriod(x))?;
        counts[i] += 1;
        acc += table.expected[i] - table.lambda_star * x;
        cumulative.push(acc);
    }
    let by_arm_total = counts
        .iter()
        .zip(&table.gaps)
        .map(|(&n, &g)| n as f64 * g)
        .sum();
    Ok(RegretSeries { total: acc, cumulative, by_arm_total, play_counts: counts })
}

/// Lipschitz constant `L` of `l(x)` on `[x_min, x_max]` and the derived
/// discretization constant `L' = L * x_max * (x_max - x_min) / x_min`.
///
/// Uniform attack times with the binary loss admit the closed form
/// `L = 1 / (hi - lo)`; anything else is estimated by the maximum finite
/// difference of the expected loss over a 10^4-point grid.
pub fn lipschitz_constants(
    spec: &LossSpec,
    model: &AttackModel,
    x_min: f64,
    x_max: f64,
) -> Result<(f64, f64), OracleError> {
    let l = match (model, spec.flavor) {
        (AttackModel::Uniform { lo, hi }, LossFlavor::Binary) => 1.0 / (hi - lo),
        _ => {
            let n = 10_000usize;
            let h = (x_max - x_min) / n as f64;
            let mut max_slope = 0.0f64;
            let mut prev = spec.expected_loss(model, x_min)?;
            for k in 1..=n {
                let x = x_min + (k as f64 / n as f64) * (x_max - x_min);
                let cur = spec.expected_loss(model, x)?;
                max_slope = max_slope.max((cur - prev).abs() / h);
                prev = cur;
            }
            max_slope
        }
    };
    Ok((l, l * x_max * (x_max - x_min) / x_min))
}

/// Minimum of `lambda(x)` over the continuum `[x_min, x_max]`: dense grid
/// scan followed by golden-section refinement around the best bracket.
pub fn continuum_lambda_star(
    spec: &LossSpec,
    model: &AttackModel,
    x_min: f64,
    x_max: f64,
) -> Result<(f64, f64), OracleError> {
    let n = 4096usize;
    let lam = |x: f64| -> Result<f64, OracleError> {
        Ok(spec.expected_loss(model, x)? / x)
    };
    let mut best_x = x_min;
    let mut best = lam(x_min)?;
    for k in 1..=n {
        let x = x_min + (k as f64 / n as f64) * (x_max - x_min);
        let v = lam(x)?;
        if v < best {
            best = v;
            best_x = x;
        }
    }
    let h = (x_max - x_min) / n as f64;
    let mut lo = (best_x - h).max(x_min);
    let mut hi = (best_x + h).min(x_max);
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = lam(x1)?;
    let mut f2 = lam(x2)?;
    for _ in 0..80 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = lam(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = lam(x2)?;
        }
        if f1 < best {
            best = f1;
            best_x = x1;
        }
        if f2 < best {
            best = f2;
            best_x = x2;
        }
    }
    Ok((best_x, best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::{CostVariant, LossFlavor};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn binary(c_d: f64) -> LossSpec {
        LossSpec::new(LossFlavor::Binary, c_d).unwrap()
    }

    fn grid_19() -> Vec<f64> {
        (0..19).map(|k| 1.0 + 0.5 * k as f64).collect()
    }

    #[test]
    fn single_period_table() {
        let t = build_table(&binary(0.1), &AttackModel::uniform(1.0, 3.0).unwrap(), &[4.0]).unwrap();
        assert_eq!(t.x_star, 4.0);
        assert_eq!(t.gaps, vec![0.0]);
        assert_eq!(t.gap_min_positive, None);
    }

    #[test]
    fn uniform_three_period_table() {
        let t = build_table(&binary(0.1), &AttackModel::uniform(1.0, 3.0).unwrap(), &[1.0, 2.0, 3.0])
            .unwrap();
        assert!((t.lambda[0] - 0.1).abs() < 1e-15);
        assert!((t.lambda[1] - 0.3).abs() < 1e-15);
        assert!((t.lambda[2] - 1.1 / 3.0).abs() < 1e-15);
        assert_eq!(t.x_star, 1.0);
    }

    #[test]
    fn weibull_19_arm_table() {
        // Exhaustive evaluation of lambda(x) = (1 - exp(-(x/5)^2) + 0.1) / x
        // over the grid; the longest arm wins for this scale.
        let model = AttackModel::weibull(5.0, 2.0).unwrap();
        let t = build_table(&binary(0.1), &model, &grid_19()).unwrap();
        let mut best_x = 0.0;
        let mut best = f64::INFINITY;
        for &x in &grid_19() {
            let lam = (1.0 - (-(x / 5.0) * (x / 5.0)).exp() + 0.1) / x;
            if lam < best {
                best = lam;
                best_x = x;
            }
        }
        assert_eq!(t.x_star, best_x);
        assert_eq!(t.x_star, 10.0);
        assert!((t.lambda_star - best).abs() < 1e-12);
        assert!((t.lambda_star - 0.108_168_436_111_126_6).abs() < 1e-12);

        // Monte-Carlo confirmation of l at a few arms.
        let spec = binary(0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for &x in &[1.0, 5.5, 10.0] {
            let i = t.index_of(x).unwrap();
            let n = 2_000_000u64;
            let mc = (0..n)
                .map(|_| spec.round_loss(x, model.sample(&mut rng), None).unwrap())
                .sum::<f64>()
                / n as f64;
            assert!((mc - t.expected[i]).abs() < 2e-3, "x={x}: {mc} vs {}", t.expected[i]);
        }
    }

    #[test]
    fn tie_break_prefers_shortest() {
        // Two periods with identical lambda: fabricate with an empirical
        // model where l(1) = 0.5 and l(2) = 1.0.
        let model = AttackModel::empirical(vec![0.5, 1.5]).unwrap();
        let t = build_table(&binary(0.0), &model, &[1.0, 2.0]).unwrap();
        assert!((t.lambda[0] - t.lambda[1]).abs() < 1e-15);
        assert_eq!(t.x_star, 1.0);
    }

    #[test]
    fn gap_identity_against_independent_recomputation() {
        let model = AttackModel::weibull(8.0, 2.0).unwrap();
        let spec = binary(0.1);
        let t = build_table(&spec, &model, &grid_19()).unwrap();
        for i in 0..t.periods.len() {
            let direct = spec.expected_loss(&model, t.periods[i]).unwrap()
                - t.periods[i] * t.lambda_star;
            assert!((t.gaps[i] - direct.max(0.0)).abs() < 1e-12);
            assert!(t.gaps[i] >= 0.0);
        }
        assert_eq!(t.gaps[t.star_index], 0.0);
    }

    #[test]
    fn pseudo_regret_optimal_plays_are_free() {
        let t = build_table(&binary(0.1), &AttackModel::uniform(1.0, 3.0).unwrap(), &[1.0, 2.0, 3.0])
            .unwrap();
        let plays = vec![t.x_star; 50];
        let r = pseudo_regret(&plays, &t).unwrap();
        assert_eq!(r.total, 0.0);
        assert_eq!(r.by_arm_total, 0.0);
    }

    #[test]
    fn pseudo_regret_counts_gap_per_play() {
        // Arm with gap 0.05 played 100 times => regret 5.
        let model = AttackModel::empirical(vec![10.0]).unwrap(); // never attacks within [1,2]
        // l(x) = c_d for both arms; lambda* at x=2; gap(1) = c_d/2.
        let t = build_table(&binary(0.1), &model, &[1.0, 2.0]).unwrap();
        assert!((t.gaps[0] - 0.05).abs() < 1e-15);
        let r = pseudo_regret(&vec![1.0; 100], &t).unwrap();
        assert!((r.total - 5.0).abs() < 1e-12);
        assert!((r.by_arm_total - 5.0).abs() < 1e-12);
    }

    #[test]
    fn pseudo_regret_two_route_agreement_on_mixed_sequence() {
        let model = AttackModel::weibull(5.0, 2.0).unwrap();
        let t = build_table(&binary(0.1), &model, &grid_19()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let plays: Vec<f64> = (0..20_000)
            .map(|_| t.periods[rng.random_range(0..t.periods.len())])
            .collect();
        let r = pseudo_regret(&plays, &t).unwrap();
        assert!((r.total - r.by_arm_total).abs() < 1e-9, "{} vs {}", r.total, r.by_arm_total);
        assert!(r.total >= 0.0);
        for w in r.cumulative.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn pseudo_regret_rejects_unknown_period() {
        let t = build_table(&binary(0.1), &AttackModel::uniform(1.0, 3.0).unwrap(), &[1.0, 2.0])
            .unwrap();
        assert!(matches!(
            pseudo_regret(&[1.5], &t),
            Err(OracleError::UnknownPeriod(_))
        ));
    }

    #[test]
    fn lipschitz_uniform_binary_closed_form() {
        let spec = binary(0.1);
        let (l, lp) =
            lipschitz_constants(&spec, &AttackModel::uniform(1.0, 3.0).unwrap(), 1.0, 10.0).unwrap();
        assert_eq!(l, 0.5);
        assert_eq!(lp, 45.0);
        let (l, lp) =
            lipschitz_constants(&spec, &AttackModel::uniform(0.0, 20.0).unwrap(), 1.0, 10.0).unwrap();
        assert!((l - 0.05).abs() < 1e-15);
        assert!((lp - 4.5).abs() < 1e-12);
    }

    #[test]
    fn lipschitz_weibull_matches_density_maximum() {
        // For binary loss, l' = density; Weibull(5,2) density peaks at
        // x = 5/sqrt(2) with value (2x/25) exp(-1/2).
        let spec = binary(0.1);
        let model = AttackModel::weibull(5.0, 2.0).unwrap();
        let (l, _) = lipschitz_constants(&spec, &model, 1.0, 10.0).unwrap();
        let x_peak = 5.0 / 2.0f64.sqrt();
        let density_peak = (2.0 * x_peak / 25.0) * (-0.5f64).exp();
        assert!((l - density_peak).abs() < 1e-3, "grid {l} vs analytic {density_peak}");
    }

    #[test]
    fn continuum_minimum_uniform_binary() {
        let spec = binary(0.1);
        let model = AttackModel::uniform(1.0, 3.0).unwrap();
        let (x, lam) = continuum_lambda_star(&spec, &model, 1.0, 10.0).unwrap();
        assert!((x - 1.0).abs() < 1e-9);
        assert!((lam - 0.1).abs() < 1e-12);
    }

    #[test]
    fn discretization_gap_bound_random_grids() {
        // For the uniform/binary instance: the best grid arm's gap is at
        // most L'/n, and gap(x) - gap'(x) <= L'/n for any x, where gap'
        // is measured against the best grid arm's lambda.
        let spec = binary(0.1);
        let model = AttackModel::uniform(1.0, 3.0).unwrap();
        let (x_min, x_max) = (1.0, 10.0);
        let (_, l_prime) = lipschitz_constants(&spec, &model, x_min, x_max).unwrap();
        let (_, lambda_star) = continuum_lambda_star(&spec, &model, x_min, x_max).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let n = rng.random_range(3usize..40);
            let grid: Vec<f64> = (1..=n)
                .map(|k| x_min + (k as f64 / n as f64) * (x_max - x_min))
                .collect();
            let t = build_table(&spec, &model, &grid).unwrap();
            let bound = l_prime / n as f64;
            let gap_star = t.expected[t.star_index] - t.periods[t.star_index] * lambda_star;
            assert!(gap_star <= bound + 1e-9, "n={n}: {gap_star} > {bound}");
            for _ in 0..1000 {
                let x = x_min + (x_max - x_min) * rng.random::<f64>();
                let l_x = spec.expected_loss(&model, x).unwrap();
                let gap = l_x - x * lambda_star;
                let gap_prime = l_x - x * t.lambda_star;
                assert!(gap - gap_prime <= bound + 1e-9);
            }
        }
    }

    #[test]
    fn table_digest_is_stable_and_sensitive() {
        let spec = binary(0.1);
        let model = AttackModel::uniform(1.0, 3.0).unwrap();
        let a = build_table(&spec, &model, &[1.0, 2.0]).unwrap();
        let b = build_table(&spec, &model, &[1.0, 2.0]).unwrap();
        let c = build_table(&spec, &model, &[1.0, 3.0]).unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn fixed_cost_table_respects_threshold() {
        let spec = binary(0.1).with_cost(CostVariant::Fixed { threshold: 3.2 });
        let model = AttackModel::weibull(5.0, 2.0).unwrap();
        let t = build_table(&spec, &model, &grid_19()).unwrap();
        for (i, &x) in t.periods.iter().enumerate() {
            if x <= 3.2 {
                assert_eq!(t.expected[i], 0.1);
            } else {
                assert!(t.expected[i] > 0.1);
            }
        }
    }
}
