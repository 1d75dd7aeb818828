//! Adaptive Simpson quadrature.
//!
//! Used for expected-loss integrals that have no closed form (Weibull with
//! the linear loss flavor). Non-convergence is a hard error: callers rely on
//! oracle values being exact to well below regret increments.

use thiserror::Error;

/// Absolute tolerance used for all expected-loss integrals.
pub const DEFAULT_ABS_TOL: f64 = 1e-9;
/// Subdivision budget before integration is declared non-convergent.
pub const DEFAULT_MAX_SUBDIVISIONS: u32 = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("quadrature did not converge over [{lo}, {hi}] within {budget} subdivisions")]
    NonConvergence { lo: f64, hi: f64, budget: u32 },
    #[error("invalid integration interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
}

/// Integrate `f` over `[lo, hi]` to absolute tolerance `abs_tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    abs_tol: f64,
    max_subdivisions: u32,
) -> Result<f64, QuadError> {
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(QuadError::InvalidInterval { lo, hi });
    }
    if lo == hi {
        return Ok(0.0);
    }
    let mid = 0.5 * (lo + hi);
    let f_lo = f(lo);
    let f_mid = f(mid);
    let f_hi = f(hi);
    let whole = simpson(lo, hi, f_lo, f_mid, f_hi);
    let mut budget = max_subdivisions;
    let value = refine(
        &f,
        lo,
        hi,
        f_lo,
        f_mid,
        f_hi,
        whole,
        abs_tol,
        &mut budget,
    )
    .ok_or(QuadError::NonConvergence {
        lo,
        hi,
        budget: max_subdivisions,
    })?;
    Ok(value)
}

fn simpson(lo: f64, hi: f64, f_lo: f64, f_mid: f64, f_hi: f64) -> f64 {
    (hi - lo) / 6.0 * (f_lo + 4.0 * f_mid + f_hi)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    f_lo: f64,
    f_mid: f64,
    f_hi: f64,
    whole: f64,
    abs_tol: f64,
    budget: &mut u32,
) -> Option<f64> {
    let mid = 0.5 * (lo + hi);
    let lm = 0.5 * (lo + mid);
    let rm = 0.5 * (mid + hi);
    let f_lm = f(lm);
    let f_rm = f(rm);
    let left = simpson(lo, mid, f_lo, f_lm, f_mid);
    let right = simpson(mid, hi, f_mid, f_rm, f_hi);
    let delta = left + right - whole;
    // Richardson criterion for composite Simpson.
    if delta.abs() <= 15.0 * abs_tol {
        return Some(left + right + delta / 15.0);
    }
    if *budget == 0 {
        return None;
    }
    *budget -= 1;
    let half_tol = 0.5 * abs_tol;
    let l = refine(f, lo, mid, f_lo, f_lm, f_mid, left, half_tol, budget)?;
    let r = refine(f, mid, hi, f_mid, f_rm, f_hi, right, half_tol, budget)?;
    Some(l + r)
}
