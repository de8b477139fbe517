//! The confidence-interval engine.
//!
//! Both interval endpoints come from the same machinery: a half-width h on
//! the lambda_0-scaled register mean buys a one-sided error probability
//!
//!   exp(-a0 [ (h + gamma) t_+ - ln Gamma(1 - t_+) ])   (upward, "plus")
//!   exp(-a0 [ (h - gamma) t_- - ln Gamma(1 + t_-) ])   (downward, "minus")
//!
//! with t_+ = 1 - psi^{-1}(-h - gamma) and t_- = psi^{-1}(h - gamma) - 1,
//! and the endpoints map back to counts through the inverse p-modified
//! harmonic numbers. The minimum log-length split solves the stationarity
//! equation for how to divide 1 - alpha between the two tails.

use crate::error::{Error, Result};
use crate::sketch::{QueryResult, SketchParams};
use crate::solvers::{
    alpha_minus_triple, alpha_plus_triple, halley_solve_from, inv_alpha_minus, inv_alpha_plus,
    inv_digamma, inv_harmonic_p, Bracket,
};
use crate::specfun::{trigamma, EULER_GAMMA, LAMBDA_0};

/// Which tail of the register mean an half-width guards.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailSide {
    /// Upward deviations of the mean; governs the lower endpoint (h_d).
    Plus,
    /// Downward deviations of the mean; governs the upper endpoint (h_u).
    Minus,
}

/// Additive slacks on lambda_0 * mean defining the interval endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfWidths {
    pub h_d: f64,
    pub h_u: f64,
}

/// One-sided error probabilities of a two-sided interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailProbs {
    pub p_plus: f64,
    pub p_minus: f64,
}

/// A confidence interval for the distinct count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    /// Lower endpoint, 0 for one-sided upper intervals.
    pub lower: f64,
    /// Upper endpoint, +inf for one-sided lower intervals.
    pub upper: f64,
    /// Guaranteed coverage level.
    pub confidence: f64,
}

/// Interval shape requested from [`interval`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntervalSpec {
    /// (0, upper) at confidence alpha.
    OneSidedUpper { alpha: f64 },
    /// (lower, +inf) at confidence alpha.
    OneSidedLower { alpha: f64 },
    /// Two-sided at confidence alpha; `split` is the share of 1 - alpha
    /// spent on the upward tail (0.5 = equal halves).
    TwoSided { alpha: f64, split: f64 },
    /// Two-sided with the tail split chosen to minimize h_d + h_u.
    TwoSidedMinLen { alpha: f64 },
}

/// Everything the interval computation produced, for reporting.
#[derive(Debug, Clone, Copy)]
pub struct IntervalReport {
    pub interval: Interval,
    pub y_mean: f64,
    pub h_d: Option<f64>,
    pub h_u: Option<f64>,
    pub p0: f64,
    pub a0: u32,
}

/// Tail probability bought by half-width `h` on a sketch with a0 registers.
pub fn tail_from_halfwidth(h: f64, a0: u32, side: TailSide) -> Result<f64> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::domain("tail_from_halfwidth", format!("h must be > 0, got {h}")));
    }
    if a0 == 0 {
        return Err(Error::domain("tail_from_halfwidth", "a0 must be >= 1".to_string()));
    }
    let exponent = match side {
        TailSide::Plus => alpha_plus_triple(h).0,
        TailSide::Minus => alpha_minus_triple(h).0,
    };
    Ok((-(a0 as f64) * exponent).exp())
}

/// Half-width needed for tail probability `p` on a sketch with a0
/// registers; the inverse of [`tail_from_halfwidth`].
pub fn halfwidth_from_tail(p: f64, a0: u32, side: TailSide) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain("halfwidth_from_tail", format!("p must lie in (0,1), got {p}")));
    }
    if a0 == 0 {
        return Err(Error::domain("halfwidth_from_tail", "a0 must be >= 1".to_string()));
    }
    let y = -p.ln() / a0 as f64;
    match side {
        TailSide::Plus => inv_alpha_plus(y),
        TailSide::Minus => inv_alpha_minus(y),
    }
}

/// Optimal split of the error budget p between the two tails (§ the
/// minimum log-length problem): returns the upward share x = p_plus along
/// with both half-widths.
#[derive(Debug, Clone, Copy)]
pub struct MinLenSplit {
    pub p_plus: f64,
    pub p_minus: f64,
    pub h_d: f64,
    pub h_u: f64,
}

/// Value, first and second derivative of the stationarity function
/// f(x) = x t_+(x) - (p - x) t_-(x) whose root is the optimal p_plus.
pub(crate) fn minlen_triple(x: f64, p: f64, a0: u32) -> (f64, f64, f64) {
    let a = a0 as f64;
    // plus side at tail budget x
    let h_d = inv_alpha_plus(-x.ln() / a).unwrap_or(f64::NAN);
    let u_p = inv_digamma(-h_d - EULER_GAMMA).unwrap_or(f64::NAN); // 1 - t_+
    let t_p = 1.0 - u_p;
    let psi1_p = trigamma(u_p).unwrap_or(f64::NAN);
    let psi2_p = crate::specfun::tetragamma(u_p).unwrap_or(f64::NAN);
    // minus side at tail budget p - x
    let h_u = inv_alpha_minus(-(p - x).ln() / a).unwrap_or(f64::NAN);
    let u_m = inv_digamma(h_u - EULER_GAMMA).unwrap_or(f64::NAN); // 1 + t_-
    let t_m = u_m - 1.0;
    let psi1_m = trigamma(u_m).unwrap_or(f64::NAN);
    let psi2_m = crate::specfun::tetragamma(u_m).unwrap_or(f64::NAN);

    let value = x * t_p - (p - x) * t_m;
    let d1 = t_p - 1.0 / (a * t_p * psi1_p) + t_m - 1.0 / (a * t_m * psi1_m);
    let dt_p = -1.0 / (a * x * t_p * psi1_p);
    let dt_m = 1.0 / (a * (p - x) * t_m * psi1_m);
    let d2 = dt_p * (1.0 + (psi1_p - t_p * psi2_p) / (a * (t_p * psi1_p) * (t_p * psi1_p)))
        + dt_m * (1.0 + (psi1_m + t_m * psi2_m) / (a * (t_m * psi1_m) * (t_m * psi1_m)));
    (value, d1, d2)
}

/// Minimum log-length tail split for total error budget p in (0,1).
pub fn min_log_length(p: f64, a0: u32) -> Result<MinLenSplit> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain("min_log_length", format!("p must lie in (0,1), got {p}")));
    }
    if a0 == 0 {
        return Err(Error::domain("min_log_length", "a0 must be >= 1".to_string()));
    }
    let eps = 1e-14 * p;
    let bracket = Bracket::new(eps, p - eps)?;
    let report = halley_solve_from(
        |x| minlen_triple(x, p, a0),
        bracket,
        0.5 * p,
        1e-12,
    )?;
    let x = report.root;
    Ok(MinLenSplit {
        p_plus: x,
        p_minus: p - x,
        h_d: halfwidth_from_tail(x, a0, TailSide::Plus)?,
        h_u: halfwidth_from_tail(p - x, a0, TailSide::Minus)?,
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain("interval", format!("alpha must lie in (0,1), got {alpha}")));
    }
    Ok(())
}

/// Confidence interval for the distinct count from a query result.
pub fn interval(q: &QueryResult, params: SketchParams, spec: IntervalSpec) -> Result<Interval> {
    interval_report(q, params, spec).map(|r| r.interval)
}

/// As [`interval`], also returning the half-widths and sketch constants
/// that went into the endpoints.
pub fn interval_report(
    q: &QueryResult,
    params: SketchParams,
    spec: IntervalSpec,
) -> Result<IntervalReport> {
    let a0 = params.a0();
    let p0 = params.p0();
    let z_slack = 0.5f64.powi(params.z0() as i32);
    let scaled_mean = LAMBDA_0 * q.mean;

    let (confidence, h_d, h_u) = match spec {
        IntervalSpec::OneSidedUpper { alpha } => {
            check_alpha(alpha)?;
            let h_u = halfwidth_from_tail(1.0 - alpha, a0, TailSide::Minus)?;
            (alpha, None, Some(h_u))
        }
        IntervalSpec::OneSidedLower { alpha } => {
            check_alpha(alpha)?;
            let h_d = halfwidth_from_tail(1.0 - alpha, a0, TailSide::Plus)?;
            (alpha, Some(h_d), None)
        }
        IntervalSpec::TwoSided { alpha, split } => {
            check_alpha(alpha)?;
            if !(split > 0.0 && split < 1.0) {
                return Err(Error::domain(
                    "interval",
                    format!("split must lie in (0,1), got {split}"),
                ));
            }
            let budget = 1.0 - alpha;
            let h_d = halfwidth_from_tail(split * budget, a0, TailSide::Plus)?;
            let h_u = halfwidth_from_tail((1.0 - split) * budget, a0, TailSide::Minus)?;
            (alpha, Some(h_d), Some(h_u))
        }
        IntervalSpec::TwoSidedMinLen { alpha } => {
            check_alpha(alpha)?;
            let split = min_log_length(1.0 - alpha, a0)?;
            (alpha, Some(split.h_d), Some(split.h_u))
        }
    };

    let lower = match h_d {
        Some(h) => {
            let arg = scaled_mean - h;
            if arg <= 0.0 {
                0.0
            } else {
                inv_harmonic_p(p0, arg)?
            }
        }
        None => 0.0,
    };
    let upper = match h_u {
        Some(h) => inv_harmonic_p(p0, scaled_mean + h + z_slack)?,
        None => f64::INFINITY,
    };

    Ok(IntervalReport {
        interval: Interval { lower, upper, confidence },
        y_mean: q.mean,
        h_d,
        h_u,
        p0,
        a0,
    })
}
