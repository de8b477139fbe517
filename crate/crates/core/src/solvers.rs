//! Bracketed scalar root finding: safeguarded Halley iteration plus the
//! four inverse problems the interval engine needs (inverse digamma,
//! inverse p-modified harmonic numbers, and the two tail-exponent
//! inversions), each with certified enclosing brackets.

use crate::error::{Error, Result};
use crate::specfun::{
    digamma_raw, harmonic_p_all_raw, ln_gamma_raw, tetragamma_raw, trigamma_raw, EULER_GAMMA,
};

/// Default residual/step tolerance for the named inverse problems.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Iteration cap for the safeguarded solver.
pub const MAX_ITER: usize = 100;

/// Positive floor substituted for lower bounds that come out non-positive;
/// the t(x) maps need x > 0.
const TINY: f64 = 1e-300;

/// A certified enclosure [lo, hi] with the root inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::domain(
                "bracket",
                format!("requires finite lo < hi, got [{lo}, {hi}]"),
            ));
        }
        Ok(Bracket { lo, hi })
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Geometric mean of the endpoints, for brackets spanning orders of
    /// magnitude. Falls back to the midpoint when lo is not positive.
    pub fn geometric_midpoint(&self) -> f64 {
        if self.lo > 0.0 {
            (self.lo * self.hi).sqrt()
        } else {
            self.midpoint()
        }
    }
}

/// How a solve finished.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Halley,
    Bisection,
    HalleyThenBisection,
}

/// Outcome of a bracketed solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveReport {
    pub root: f64,
    pub iterations: usize,
    pub method: SolveMethod,
    pub residual: f64,
}

/// Safeguarded Halley iteration on a triple evaluator (f, f', f'') over a
/// bracket, starting from the bracket midpoint.
///
/// Every step is validated against a maintained sign-change bracket: a step
/// that leaves it, or a non-finite Halley denominator, is replaced by a
/// bisection step for that iteration. Stops when |f| <= tol or the step
/// drops below tol * max(1, |x|).
pub fn halley_solve<F>(f: F, bracket: Bracket, tol: f64) -> Result<SolveReport>
where
    F: Fn(f64) -> (f64, f64, f64),
{
    let start = bracket.midpoint();
    halley_solve_from(f, bracket, start, tol)
}

/// As [`halley_solve`] with an explicit initial iterate.
pub fn halley_solve_from<F>(f: F, bracket: Bracket, start: f64, tol: f64) -> Result<SolveReport>
where
    F: Fn(f64) -> (f64, f64, f64),
{
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let (fa, _, _) = f(a);
    if fa.abs() <= tol {
        return Ok(SolveReport { root: a, iterations: 0, method: SolveMethod::Bisection, residual: fa });
    }
    let (fb, _, _) = f(b);
    if fb.abs() <= tol {
        return Ok(SolveReport { root: b, iterations: 0, method: SolveMethod::Bisection, residual: fb });
    }
    let sign_change = fa.is_sign_negative() != fb.is_sign_negative();
    let fa_negative = fa.is_sign_negative();

    let mut x = start.clamp(a, b);
    let mut used_halley = false;
    let mut used_bisection = false;
    let mut best = (x, f64::INFINITY);

    for iteration in 1..=MAX_ITER {
        let (fx, d1, d2) = f(x);
        if fx.abs() < best.1 {
            best = (x, fx.abs());
        }
        if fx == 0.0 || fx.abs() <= tol {
            return Ok(SolveReport {
                root: x,
                iterations: iteration,
                method: method_of(used_halley, used_bisection),
                residual: fx,
            });
        }
        if sign_change {
            if fx.is_sign_negative() == fa_negative {
                a = x;
            } else {
                b = x;
            }
        }

        let denom = 2.0 * d1 * d1 - fx * d2;
        let halley = x - 2.0 * fx * d1 / denom;
        let newton = x - fx / d1;
        let candidate = if halley.is_finite() && halley > a && halley < b {
            used_halley = true;
            halley
        } else if newton.is_finite() && newton > a && newton < b {
            used_halley = true;
            newton
        } else if sign_change {
            used_bisection = true;
            0.5 * (a + b)
        } else if halley.is_finite() {
            // Without a sign change there is nothing to bisect on; pin the
            // step to the bracket and let the residual criterion decide.
            used_halley = true;
            halley.clamp(a, b)
        } else {
            used_bisection = true;
            0.5 * (a + b)
        };

        let step = (candidate - x).abs();
        x = candidate;
        // The step criterion is only trustworthy while a sign bracket is
        // collapsing around the root.
        if sign_change && step <= tol * x.abs().max(1.0) {
            let (fx, _, _) = f(x);
            return Ok(SolveReport {
                root: x,
                iterations: iteration,
                method: method_of(used_halley, used_bisection),
                residual: fx,
            });
        }
    }
    Err(Error::Convergence {
        op: "halley_solve",
        iterations: MAX_ITER,
        best: best.0,
        residual: best.1,
    })
}

fn method_of(used_halley: bool, used_bisection: bool) -> SolveMethod {
    match (used_halley, used_bisection) {
        (true, false) => SolveMethod::Halley,
        (false, _) => SolveMethod::Bisection,
        (true, true) => SolveMethod::HalleyThenBisection,
    }
}

/// Enclosure for psi(x) = y: (e^y, e^y + 1/2) when that interval sits right
/// of 1/2, widened down to a tiny positive floor otherwise. Deep in the
/// negative range, where the root hugs zero, the pole expansion
/// -gamma - 1/x < psi(x) < -gamma - 1/x + zeta(2) x pins the root much
/// tighter than the widened interval.
pub fn digamma_bracket(y: f64) -> Result<Bracket> {
    if !y.is_finite() {
        return Err(Error::domain("digamma_bracket", format!("y must be finite, got {y}")));
    }
    let ey = y.exp();
    if ey.is_infinite() {
        return Err(Error::domain(
            "digamma_bracket",
            format!("root e^y overflows f64 for y = {y}"),
        ));
    }
    if ey > 0.5 {
        // Past e^y ~ 2^52 the half-unit slack falls below one ulp; widen by
        // one ulp each way so the enclosure stays a real interval.
        let lo = if ey + 0.5 > ey { ey } else { f64::next_down(ey) };
        let hi = f64::max(ey + 0.5, f64::next_up(ey));
        return Bracket::new(lo, hi);
    }
    if y <= -2.5 {
        let zeta2 = std::f64::consts::PI * std::f64::consts::PI / 6.0;
        let w = y + EULER_GAMMA; // < 0 here
        let lower = 2.0 / ((w * w + 4.0 * zeta2).sqrt() - w);
        let upper = (1.0 / (-w)).min(ey + 0.5);
        return Bracket::new(lower.max(TINY), upper);
    }
    Bracket::new(TINY, ey + 0.5)
}

/// Inverse digamma: the x > 0 with psi(x) = y.
pub fn inv_digamma(y: f64) -> Result<f64> {
    inv_digamma_solve(y, DEFAULT_TOL).map(|r| r.root)
}

/// As [`inv_digamma`], returning the full solve report at tolerance `tol`.
pub fn inv_digamma_solve(y: f64, tol: f64) -> Result<SolveReport> {
    let bracket = digamma_bracket(y)?;
    halley_solve(
        |x| (digamma_raw(x) - y, trigamma_raw(x), tetragamma_raw(x)),
        bracket,
        tol,
    )
}

/// Enclosure for H_p(x) = y from the digamma sandwich, with the sharper
/// lower branch cutting in once y clears its validity threshold. Lower
/// bounds are clamped at zero. Valid for p in (0,1]; the 1/ln(1-p) term
/// vanishes in the p = 1 limit.
pub fn hp_bracket(p: f64, y: f64) -> Result<Bracket> {
    if !(p > 0.0 && p <= 1.0) || !y.is_finite() || y < 0.0 {
        return Err(Error::domain(
            "hp_bracket",
            format!("requires p in (0,1] and y >= 0, got p = {p}, y = {y}"),
        ));
    }
    let e = std::f64::consts::E;
    let upper = (y - EULER_GAMMA).exp() / p - 0.5;
    // 1/ln(1-p), a negative quantity; -> 0 as p -> 1
    let inv_ln_omp = if p == 1.0 { 0.0 } else { 1.0 / (-p).ln_1p() };
    let threshold = (EULER_GAMMA + p * (0.5 - inv_ln_omp / (e - 1.0))).ln();
    let lower = if y > threshold {
        (y - EULER_GAMMA).exp() / p - e + inv_ln_omp
    } else {
        (y - EULER_GAMMA).exp() - 1.0
    };
    Bracket::new(lower.max(0.0), upper)
}

/// Inverse of the p-modified harmonic numbers: x >= 0 with H_p(x) = y.
pub fn inv_harmonic_p(p: f64, y: f64) -> Result<f64> {
    inv_harmonic_p_solve(p, y, DEFAULT_TOL).map(|r| r.root)
}

/// As [`inv_harmonic_p`], returning the full solve report at tolerance `tol`.
pub fn inv_harmonic_p_solve(p: f64, y: f64, tol: f64) -> Result<SolveReport> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::domain("inv_harmonic_p", format!("p must lie in (0,1], got {p}")));
    }
    if !y.is_finite() || y < 0.0 {
        return Err(Error::domain("inv_harmonic_p", format!("y must be >= 0, got {y}")));
    }
    if y == 0.0 {
        return Ok(SolveReport { root: 0.0, iterations: 0, method: SolveMethod::Halley, residual: 0.0 });
    }
    let appendix = hp_bracket(p, y)?;
    // Concavity refinement: H_p(x) >= p x on [0,1] and <= p x beyond, so
    // y/p bounds the root from whichever side applies. Without it the
    // Appendix enclosure is orders of magnitude too wide for small y.
    let ratio = y / p;
    let bracket = if y <= p {
        Bracket::new(appendix.lo, appendix.hi.min(ratio))?
    } else {
        Bracket::new(appendix.lo.max(ratio.min(appendix.hi * 0.999_999)), appendix.hi)?
    };
    halley_solve(
        |x| {
            let (value, d1, d2) = harmonic_p_all_raw(p, x.max(0.0));
            (value - y, d1, d2)
        },
        bracket,
        tol,
    )
}

/// Enclosure for the downward-tail exponent inversion (the g_- problem).
pub fn alpha_minus_bracket(y: f64) -> Result<Bracket> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::domain("alpha_minus_bracket", format!("y must be > 0, got {y}")));
    }
    if y < 3.0 {
        Bracket::new((y / 50.0).sqrt().max(TINY), std::f64::consts::PI * (2.0 * y / 3.0).sqrt())
    } else {
        Bracket::new(
            (2.0 / 3.0) * ((y + 0.5).ln() + EULER_GAMMA),
            2.0 * ((4.0 / 3.0 * y + 1.0).ln() + EULER_GAMMA),
        )
    }
}

/// g_-(x) = (x - gamma) t - ln Gamma(1 + t) at t = psi^{-1}(x - gamma) - 1,
/// together with g' = t and g'' = 1/psi_1(1 + t).
pub(crate) fn alpha_minus_triple(x: f64) -> (f64, f64, f64) {
    // u = 1 + t
    let u = inv_digamma_solve(x - EULER_GAMMA, 1e-13)
        .map(|r| r.root)
        .unwrap_or(f64::NAN);
    let t = u - 1.0;
    let g = (x - EULER_GAMMA) * t - ln_gamma_raw(u);
    (g, t, 1.0 / trigamma_raw(u))
}

/// Solves y = (x - gamma) t_-(x) - ln Gamma(1 + t_-(x)) for x > 0, the
/// half-width that produces a downward tail of e^{-a0 y}.
pub fn inv_alpha_minus(y: f64) -> Result<f64> {
    inv_alpha_minus_solve(y, DEFAULT_TOL).map(|r| r.root)
}

/// As [`inv_alpha_minus`], returning the full solve report at tolerance `tol`.
pub fn inv_alpha_minus_solve(y: f64, tol: f64) -> Result<SolveReport> {
    let bracket = alpha_minus_bracket(y)?;
    let start = bracket.geometric_midpoint();
    halley_solve_from(
        |x| {
            let (g, d1, d2) = alpha_minus_triple(x);
            (g - y, d1, d2)
        },
        bracket,
        start,
        tol,
    )
}

/// Enclosure for the upward-tail exponent inversion (the g_+ problem).
///
/// The lower bound runs through the auxiliary constant C in (0,1); the
/// expression here is the conjugate form of the quadratic root, which does
/// not cancel for small y.
pub fn alpha_plus_bracket(y: f64) -> Result<Bracket> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::domain("alpha_plus_bracket", format!("y must be > 0, got {y}")));
    }
    let pi2_6 = std::f64::consts::PI * std::f64::consts::PI / 6.0;
    let a = (3.0 - pi2_6) / 2.0;
    let b = y / 2.0;
    let lin = b + (1.0 - a);
    // 1 - z_root = 2b / (2a + lin + sqrt(lin^2 + 4a))
    let one_minus_z = 2.0 * b / (2.0 * a + lin + (lin * lin + 4.0 * a).sqrt());
    let c = one_minus_z.sqrt();
    let lower = (-(1.0 - c).ln() - EULER_GAMMA).max(pi2_6 * c);
    Bracket::new(lower.max(TINY), 2.0 * ((y + 1.0) * (y + 1.0) - 1.0).sqrt())
}

/// g_+(x) = (x + gamma) t - ln Gamma(1 - t) at t = 1 - psi^{-1}(-x - gamma),
/// together with g' = t and g'' = 1/psi_1(1 - t).
pub(crate) fn alpha_plus_triple(x: f64) -> (f64, f64, f64) {
    // u = 1 - t
    let u = inv_digamma_solve(-x - EULER_GAMMA, 1e-13)
        .map(|r| r.root)
        .unwrap_or(f64::NAN);
    let t = 1.0 - u;
    let g = (x + EULER_GAMMA) * t - ln_gamma_raw(u);
    (g, t, 1.0 / trigamma_raw(u))
}

/// Solves y = (x + gamma) t_+(x) - ln Gamma(1 - t_+(x)) for x > 0, the
/// half-width that produces an upward tail of e^{-a0 y}.
pub fn inv_alpha_plus(y: f64) -> Result<f64> {
    inv_alpha_plus_solve(y, DEFAULT_TOL).map(|r| r.root)
}

/// As [`inv_alpha_plus`], returning the full solve report at tolerance `tol`.
pub fn inv_alpha_plus_solve(y: f64, tol: f64) -> Result<SolveReport> {
    let bracket = alpha_plus_bracket(y)?;
    let start = bracket.geometric_midpoint();
    halley_solve_from(
        |x| {
            let (g, d1, d2) = alpha_plus_triple(x);
            (g - y, d1, d2)
        },
        bracket,
        start,
        tol,
    )
}
