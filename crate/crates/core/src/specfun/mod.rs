//! Special functions backing the interval formulas: gamma-log, the digamma
//! family, the Lerch transcendent, and the p-modified harmonic numbers.

mod gamma;
mod harmonic;
mod lerch;

pub use gamma::{digamma, ln_gamma, tetragamma, trigamma};
pub use harmonic::{harmonic, harmonic_p, harmonic_p_d1, harmonic_p_d2};
pub use lerch::{lerch_phi, lerch_tail_bound, LerchArgs};

pub(crate) use gamma::{digamma_raw, ln_gamma_raw, tetragamma_raw, trigamma_raw};
pub(crate) use harmonic::harmonic_p_all_raw;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Rate of the register exponentials: lambda_0 = ln 2.
pub const LAMBDA_0: f64 = std::f64::consts::LN_2;

#[cfg(test)]
mod tests {
    use super::*;

    /// ln of the finite product prod_{j=1}^{m} e^{-s t/j} / (1 - s t/j)
    /// with s = +1 or -1, summed in compensated arithmetic. This is the
    /// Schloemilch/Newman product oracle for ln Gamma.
    fn log_finite_product(t: f64, m: u64, sign: f64) -> f64 {
        let mut sum = 0.0;
        let mut c = 0.0;
        for j in 1..=m {
            let r = sign * t / j as f64;
            let term = -r - (-r).ln_1p();
            let y = term - c;
            let s = sum + y;
            c = (s - sum) - y;
            sum = s;
        }
        sum
    }

    #[test]
    fn gamma_product_form_minus() {
        // Gamma(1-t) e^{-gamma t} = prod_{j>=1} e^{-t/j}/(1 - t/j), t in (0,1);
        // the product truncated at 10^6 terms agrees to 1e-5 relative.
        let mut t = 0.05;
        while t <= 0.951 {
            let product = log_finite_product(t, 1_000_000, 1.0);
            let gamma_form = ln_gamma(1.0 - t).unwrap() - EULER_GAMMA * t;
            assert!(
                (product - gamma_form).abs() <= 1e-5 * gamma_form.abs().max(1.0),
                "t = {t}: product {product} vs gamma form {gamma_form}"
            );
            t += 0.09;
        }
    }

    #[test]
    fn gamma_product_form_plus() {
        // Gamma(1+t) e^{gamma t} = prod_{j>=1} e^{t/j}/(1 + t/j), t > 0.
        // The truncation gap scales like t^2/(2m), so larger t needs more
        // terms to clear 1e-5 relative.
        let mut t = 0.1;
        while t <= 5.01 {
            let product = log_finite_product(t, 4_000_000, -1.0);
            let gamma_form = ln_gamma(1.0 + t).unwrap() + EULER_GAMMA * t;
            assert!(
                (product - gamma_form).abs() <= 1e-5 * gamma_form.abs().max(1.0),
                "t = {t}: product {product} vs gamma form {gamma_form}"
            );
            t += 0.49;
        }
    }

    #[test]
    fn finite_products_increase_to_gamma_limit() {
        for &t in &[0.2, 0.5, 0.8] {
            let limit = ln_gamma(1.0 - t).unwrap() - EULER_GAMMA * t;
            let mut prev = f64::NEG_INFINITY;
            for m in [1u64, 5, 50, 500] {
                let partial = log_finite_product(t, m, 1.0);
                assert!(partial > prev, "not increasing at t={t}, m={m}");
                assert!(partial <= limit + 1e-14, "finite product exceeds limit at t={t}, m={m}");
                prev = partial;
            }
        }
        for &t in &[0.5, 2.0, 4.5] {
            let limit = ln_gamma(1.0 + t).unwrap() + EULER_GAMMA * t;
            let mut prev = f64::NEG_INFINITY;
            for m in [1u64, 5, 50, 500] {
                let partial = log_finite_product(t, m, -1.0);
                assert!(partial > prev, "not increasing at t={t}, m={m}");
                assert!(partial <= limit + 1e-14, "finite product exceeds limit at t={t}, m={m}");
                prev = partial;
            }
        }
    }
}
