//! Lerch transcendent Phi(z, s, a) = sum_{n>=0} z^n / (a+n)^s for the
//! arguments this crate needs: z in [0,1), s in {1,2,3}, a >= 1.
//!
//! The direct series is used away from z = 1, with the exponential-integral
//! tail bound as the truncation certificate. Very close to z = 1 the series
//! stalls, so evaluation switches to adaptive quadrature of
//!
//!   Phi(z, s, a) = (1 / (Gamma(s) a^s)) *
//!                  int_0^inf v^{s-1} e^{-v} / ((1-z) + z(1 - e^{-v/a})) dv,
//!
//! the integral form rewritten to be singularity-free (the denominator is
//! computed with expm1, so it never cancels).
//!
//! Internal entry points carry 1-z as its own argument: the caller knows it
//! exactly (it is p in the harmonic-number formulas), and recomputing it
//! from z loses relative precision precisely where it matters.

use crate::error::{Error, Result};

/// Arguments of the Lerch transcendent as used here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LerchArgs {
    /// z in [0, 1); equals 1 - p in every use inside this crate.
    pub z: f64,
    /// Exponent s; only 1, 2, 3 are supported.
    pub s: u8,
    /// Shift a >= 1.
    pub a: f64,
}

/// Above this z the series needs too many terms and quadrature takes over.
const SERIES_Z_LIMIT: f64 = 0.999;
const REL_TOL: f64 = 1e-14;
const MAX_TERMS: usize = 40_000_000;

/// Upper bound on sum_{j>=0} z^{x+j+1}/(x+j+1) for z in (0,1), x > 0:
/// e^{x ln z} ln(1 - 1/(x ln z)). Used as the series-truncation certificate.
pub fn lerch_tail_bound(z: f64, x: f64) -> Result<f64> {
    if !(z > 0.0 && z < 1.0) || !(x > 0.0) {
        return Err(Error::domain(
            "lerch_tail_bound",
            format!("requires z in (0,1) and x > 0, got z = {z}, x = {x}"),
        ));
    }
    Ok(lerch_tail_bound_raw(z, x))
}

pub(crate) fn lerch_tail_bound_raw(z: f64, x: f64) -> f64 {
    let xlnz = x * z.ln();
    (xlnz).exp() * (1.0 - 1.0 / xlnz).ln()
}

/// Lerch transcendent for z in [0,1), s in {1,2,3}, a >= 1.
pub fn lerch_phi(args: LerchArgs) -> Result<f64> {
    let LerchArgs { z, s, a } = args;
    if !(1..=3).contains(&s) {
        return Err(Error::domain("lerch_phi", format!("s must be 1, 2 or 3, got {s}")));
    }
    if !z.is_finite() || z < 0.0 || z >= 1.0 {
        return Err(Error::domain(
            "lerch_phi",
            format!("series diverges for z >= 1 and z must be >= 0, got {z}"),
        ));
    }
    if !(a >= 1.0) {
        return Err(Error::domain("lerch_phi", format!("requires a >= 1, got {a}")));
    }
    Ok(lerch_phi_with(z, 1.0 - z, s, a))
}

pub(crate) fn lerch_phi_with(z: f64, one_minus_z: f64, s: u8, a: f64) -> f64 {
    if z > SERIES_Z_LIMIT {
        lerch_phi_quadrature(z, one_minus_z, s, a)
    } else {
        lerch_phi_series(z, one_minus_z, s, a)
    }
}

fn lerch_phi_series(z: f64, one_minus_z: f64, s: u8, a: f64) -> f64 {
    if z == 0.0 {
        return a.powi(-(s as i32));
    }
    // Scale for the exponential-integral certificate: the bound controls the
    // tail of sum z^{a+n}/(a+n), which is z^a times the tail of the series
    // summed here.
    let za = (a * z.ln()).exp();
    let ratio = z / one_minus_z;
    let mut sum = 0.0;
    let mut compensation = 0.0;
    let mut zn = 1.0;
    for n in 0..MAX_TERMS {
        let base = a + n as f64;
        let denom = match s {
            1 => base,
            2 => base * base,
            _ => base * base * base,
        };
        let term = zn / denom;
        let y = term - compensation;
        let t = sum + y;
        compensation = (t - sum) - y;
        sum = t;
        zn *= z;
        if n >= 1 {
            let threshold = REL_TOL * sum;
            if term * ratio < threshold
                || (za > 0.0 && lerch_tail_bound_raw(z, a + n as f64) < threshold * za)
            {
                break;
            }
        }
    }
    sum
}

/// All three of Phi(z,1,a), Phi(z,2,a), Phi(z,3,a) in one pass over the
/// series; the derivative formulas of the p-modified harmonic numbers
/// consume them together.
pub(crate) fn lerch_phi_123(z: f64, one_minus_z: f64, a: f64) -> [f64; 3] {
    debug_assert!((0.0..1.0).contains(&z) && a >= 1.0);
    if z == 0.0 {
        return [1.0 / a, 1.0 / (a * a), 1.0 / (a * a * a)];
    }
    if z > SERIES_Z_LIMIT {
        return [
            lerch_phi_quadrature(z, one_minus_z, 1, a),
            lerch_phi_quadrature(z, one_minus_z, 2, a),
            lerch_phi_quadrature(z, one_minus_z, 3, a),
        ];
    }
    let ratio = z / one_minus_z;
    let mut sums = [0.0f64; 3];
    let mut comps = [0.0f64; 3];
    let mut zn = 1.0;
    for n in 0..MAX_TERMS {
        let base = a + n as f64;
        let mut term = zn / base;
        let mut terms = [0.0f64; 3];
        for k in 0..3 {
            terms[k] = term;
            let y = term - comps[k];
            let t = sums[k] + y;
            comps[k] = (t - sums[k]) - y;
            sums[k] = t;
            term /= base;
        }
        zn *= z;
        if n >= 1 && (0..3).all(|k| terms[k] * ratio < REL_TOL * sums[k]) {
            break;
        }
    }
    sums
}

/// Quadrature route for z close to 1. The substitution w = v/a folds the
/// decay scale into a unit-rate exponential; the denominator stays bounded
/// away from cancellation via expm1.
fn lerch_phi_quadrature(z: f64, one_minus_z: f64, s: u8, a: f64) -> f64 {
    let integrand = |v: f64| -> f64 {
        let weight = match s {
            1 => 1.0,
            2 => v,
            _ => v * v,
        };
        let denom = one_minus_z + z * (-f64::exp_m1(-v / a));
        weight * (-v).exp() / denom
    };
    // The denominator turns over at v ~ a(1-z); start the panels there so
    // the adaptive rule sees the sharp region on its own panel.
    let knee = (a * one_minus_z).clamp(1e-12, 10.0);
    let mut total = 0.0;
    let mut lo = 0.0;
    let mut hi = knee;
    while lo < 60.0 {
        total += adaptive_simpson(&integrand, lo, hi.min(60.0), 1e-15, 48);
        lo = hi;
        hi *= 4.0;
    }
    let gamma_s = match s {
        1 | 2 => 1.0,
        _ => 2.0,
    };
    total / (gamma_s * a.powi(s as i32))
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: f64, depth: u32) -> f64 {
    let mid = 0.5 * (lo + hi);
    let flo = f(lo);
    let fmid = f(mid);
    let fhi = f(hi);
    let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    simpson_step(f, lo, hi, flo, fmid, fhi, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    flo: f64,
    fmid: f64,
    fhi: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let mid = 0.5 * (lo + hi);
    let lmid = 0.5 * (lo + mid);
    let rmid = 0.5 * (mid + hi);
    let flmid = f(lmid);
    let frmid = f(rmid);
    let left = (mid - lo) / 6.0 * (flo + 4.0 * flmid + fmid);
    let right = (hi - mid) / 6.0 * (fmid + 4.0 * frmid + fhi);
    let split = left + right;
    let err = split - whole;
    if depth == 0 || err.abs() <= 15.0 * tol * split.abs().max(1e-300) {
        return split + err / 15.0;
    }
    simpson_step(f, lo, mid, flo, flmid, fmid, left, tol, depth - 1)
        + simpson_step(f, mid, hi, fmid, frmid, fhi, right, tol, depth - 1)
}
