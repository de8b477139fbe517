//! Harmonic numbers and their p-modification
//! H_p(x) = int_0^1 (1 - (1-p+pt)^x)/(1-t) dt, the expected harmonic number
//! of a Binomial(x, p) count at integer x. Evaluated through
//!
//!   H_p(x) = psi(x+1) + gamma + ln p + (1-p)^{x+1} Phi(1-p, 1, x+1),
//!
//! with the derivatives in x picking up Phi at s = 2, 3.

use super::gamma::{digamma_raw, tetragamma_raw, trigamma_raw};
use super::lerch::{lerch_phi_123, lerch_phi_with};
use super::EULER_GAMMA;
use crate::error::{Error, Result};

/// (1-p)^{x+1} underflows past this exponent; the Lerch term is then zero
/// to every bit of a f64.
const UNDERFLOW_EXP: f64 = -745.0;

/// m-th harmonic number by compensated partial summation; harmonic(0) = 0.
pub fn harmonic(m: u64) -> f64 {
    let mut sum = 0.0;
    let mut compensation = 0.0;
    for j in 1..=m {
        let term = 1.0 / j as f64;
        let y = term - compensation;
        let t = sum + y;
        compensation = (t - sum) - y;
        sum = t;
    }
    sum
}

fn check_args(op: &'static str, p: f64, x: f64) -> Result<()> {
    if !p.is_finite() || !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(op, format!("p must lie in [0,1], got {p}")));
    }
    if !x.is_finite() || x < 0.0 {
        return Err(Error::domain(op, format!("x must be finite and >= 0, got {x}")));
    }
    Ok(())
}

/// p-modification of the harmonic numbers, H_p(x), for p in [0,1], x >= 0.
///
/// H_0 is identically zero and H_1 reduces to the classical harmonic
/// numbers; both are handled without touching ln p or the Lerch series.
pub fn harmonic_p(p: f64, x: f64) -> Result<f64> {
    check_args("harmonic_p", p, x)?;
    Ok(harmonic_p_raw(p, x))
}

pub(crate) fn harmonic_p_raw(p: f64, x: f64) -> f64 {
    if p == 0.0 || x == 0.0 {
        return 0.0;
    }
    let psi_term = digamma_raw(x + 1.0) + EULER_GAMMA;
    if p == 1.0 {
        return psi_term;
    }
    let z = 1.0 - p;
    let ln_z = (-p).ln_1p();
    let exponent = (x + 1.0) * ln_z;
    if exponent < UNDERFLOW_EXP {
        return psi_term + p.ln();
    }
    let phi = lerch_phi_with(z, p, 1, x + 1.0);
    psi_term + p.ln() + exponent.exp() * phi
}

/// First derivative of H_p in x; strictly positive.
pub fn harmonic_p_d1(p: f64, x: f64) -> Result<f64> {
    check_args("harmonic_p_d1", p, x)?;
    if p == 0.0 {
        return Err(Error::domain("harmonic_p_d1", "p must be positive".to_string()));
    }
    Ok(harmonic_p_all_raw(p, x).1)
}

/// Second derivative of H_p in x.
pub fn harmonic_p_d2(p: f64, x: f64) -> Result<f64> {
    check_args("harmonic_p_d2", p, x)?;
    if p == 0.0 {
        return Err(Error::domain("harmonic_p_d2", "p must be positive".to_string()));
    }
    Ok(harmonic_p_all_raw(p, x).2)
}

/// Value, first and second derivative of H_p at x sharing a single Lerch
/// pass; this is what the inverse solver iterates on.
pub(crate) fn harmonic_p_all_raw(p: f64, x: f64) -> (f64, f64, f64) {
    debug_assert!(p > 0.0 && p <= 1.0 && x >= 0.0);
    let a = x + 1.0;
    let psi = digamma_raw(a) + EULER_GAMMA;
    let psi1 = trigamma_raw(a);
    let psi2 = tetragamma_raw(a);
    if p == 1.0 {
        return (if x == 0.0 { 0.0 } else { psi }, psi1, psi2);
    }
    let z = 1.0 - p;
    let ln_z = (-p).ln_1p();
    let exponent = a * ln_z;
    if exponent < UNDERFLOW_EXP {
        let value = if x == 0.0 { 0.0 } else { psi + p.ln() };
        return (value, psi1, psi2);
    }
    let [phi1, phi2, phi3] = lerch_phi_123(z, p, a);
    let weight = exponent.exp();
    let value = if x == 0.0 {
        0.0
    } else {
        psi + p.ln() + weight * phi1
    };
    let d1 = psi1 + weight * (ln_z * phi1 - phi2);
    let d2 = psi2 + weight * (ln_z * ln_z * phi1 - 2.0 * ln_z * phi2 + 2.0 * phi3);
    (value, d1, d2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_spot_values() {
        assert_eq!(harmonic(0), 0.0);
        assert_eq!(harmonic(1), 1.0);
        assert_eq!(harmonic(2), 1.5);
        // H(10) = 7381/2520
        assert!((harmonic(10) - 7381.0 / 2520.0).abs() < 1e-15);
    }

    /// E[H(Binomial(n, p))] by direct expansion over the binomial pmf.
    fn binomial_expectation(p: f64, n: u64) -> f64 {
        if p == 1.0 {
            return harmonic(n);
        }
        let q = 1.0 - p;
        // pmf recursively: b(0) = q^n, b(m+1) = b(m) (n-m)/(m+1) p/q
        let mut pmf = q.powi(n as i32);
        let mut expectation = 0.0;
        for m in 0..=n {
            expectation += harmonic(m) * pmf;
            if m < n {
                pmf *= (n - m) as f64 / (m + 1) as f64 * p / q;
            }
        }
        expectation
    }

    #[test]
    fn matches_binomial_expectation() {
        for &p in &[1.0, 0.5, 0.25, 0.0625] {
            for n in [0u64, 1, 2, 3, 10, 60] {
                let direct = binomial_expectation(p, n);
                let closed = harmonic_p(p, n as f64).unwrap();
                assert!(
                    (direct - closed).abs() < 1e-12,
                    "p={p} n={n}: {closed} vs oracle {direct}"
                );
            }
        }
    }

    #[test]
    fn spot_values() {
        assert!((harmonic_p(0.25, 1.0).unwrap() - 0.25).abs() < 1e-14);
        assert!((harmonic_p(1.0, 3.0).unwrap() - 11.0 / 6.0).abs() < 1e-14);
        assert_eq!(harmonic_p(0.0, 17.0).unwrap(), 0.0);
        assert_eq!(harmonic_p(0.3, 0.0).unwrap(), 0.0);
        // H_{1/2}(10) as the binomial-expectation oracle value
        let oracle = binomial_expectation(0.5, 10);
        assert!((harmonic_p(0.5, 10.0).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn h_p_one_equals_p() {
        for &p in &[1e-6, 0.01, 0.25, 0.5, 0.9, 1.0] {
            let v = harmonic_p(p, 1.0).unwrap();
            assert!((v - p).abs() < 1e-13, "H_p(1) = {v} for p = {p}");
        }
    }

    #[test]
    fn monotone_in_x_and_p() {
        let xs: Vec<f64> = (0..40).map(|i| 0.25 * i as f64).collect();
        for &p in &[0.0625, 0.25, 0.5, 1.0] {
            let mut prev = -1.0;
            for &x in &xs {
                let v = harmonic_p(p, x).unwrap();
                assert!(v > prev || (x == 0.0 && v == 0.0), "not increasing in x at ({p},{x})");
                prev = v;
            }
        }
        for &x in &[0.5, 2.0, 25.0] {
            let mut prev = -1.0;
            for i in 1..=20 {
                let p = i as f64 / 20.0;
                let v = harmonic_p(p, x).unwrap();
                assert!(v > prev, "not increasing in p at ({p},{x})");
                prev = v;
            }
        }
    }

    #[test]
    fn sandwich_bounds() {
        for &p in &[0.0625, 0.25, 0.5, 0.9] {
            for &x in &[0.5, 1.0, 7.0, 120.0, 4000.0] {
                let v = harmonic_p(p, x).unwrap();
                let psi_term = digamma_raw(x + 1.0) + EULER_GAMMA;
                assert!(v <= psi_term + 1e-12, "upper sandwich at ({p},{x})");
                assert!(v >= psi_term + p.ln() - 1e-12, "lower sandwich at ({p},{x})");
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        // Second differences divide the evaluation noise by h^2, so d2 gets
        // a coarser step.
        let h1 = 1e-5;
        let h2 = 1e-3;
        for &(p, x) in &[(0.5, 5.0), (0.25, 1.5), (0.9, 40.0), (0.0625, 300.0)] {
            let d1 = harmonic_p_d1(p, x).unwrap();
            let fd1 =
                (harmonic_p(p, x + h1).unwrap() - harmonic_p(p, x - h1).unwrap()) / (2.0 * h1);
            assert!(
                ((d1 - fd1) / d1).abs() < 1e-6,
                "d1 at ({p},{x}): {d1} vs {fd1}"
            );
            let d2 = harmonic_p_d2(p, x).unwrap();
            let fd2 = (harmonic_p(p, x + h2).unwrap() - 2.0 * harmonic_p(p, x).unwrap()
                + harmonic_p(p, x - h2).unwrap())
                / (h2 * h2);
            assert!(
                ((d2 - fd2) / d2).abs() < 1e-4,
                "d2 at ({p},{x}): {d2} vs {fd2}"
            );
            assert!(d1 > 0.0);
        }
    }

    #[test]
    fn d1_limit_at_p_one() {
        let v = harmonic_p_d1(1.0 - 1e-12, 5.0).unwrap();
        let limit = trigamma_raw(6.0);
        assert!((v - limit).abs() < 1e-9, "{v} vs {limit}");
        assert!((harmonic_p_d1(1.0, 5.0).unwrap() - limit).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        assert!(harmonic_p(0.5, -1.0).is_err());
        assert!(harmonic_p(-0.1, 1.0).is_err());
        assert!(harmonic_p(1.1, 1.0).is_err());
        assert!(harmonic_p_d1(0.0, 1.0).is_err());
        assert!(harmonic_p_d2(0.0, 1.0).is_err());
    }

    #[test]
    fn large_x_underflow_path() {
        // (1-p)^{x+1} underflows: value must equal psi(x+1)+gamma+ln p and
        // remain monotone across the switch.
        let p = 0.5;
        let lo = harmonic_p(p, 1070.0).unwrap();
        let hi = harmonic_p(p, 1080.0).unwrap();
        assert!(hi > lo);
        let expected = digamma_raw(1081.0) + EULER_GAMMA + p.ln();
        assert!((hi - expected).abs() < 1e-12);
    }
}
