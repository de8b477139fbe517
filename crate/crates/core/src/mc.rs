//! Monte Carlo validation harness.
//!
//! Three experiment families: exact finite-product Chernoff minima against
//! the Gamma-form bounds that the interval engine uses, end-to-end coverage
//! of the intervals on synthetic streams, and the extreme-value moment
//! generating function of centered register maxima.
//!
//! Reproducibility contract: every report records its seed, each sample
//! runs on its own counter-based RNG substream derived from
//! (seed, sample index), and aggregation is sequential compensated
//! summation over the sample vector in index order, so a seed pins the
//! report bit-for-bit regardless of thread count.

use crate::ci::{self, IntervalSpec, TailSide};
use crate::error::{Error, Result};
use crate::sketch::{Sketch, SketchParams};
use crate::specfun::{digamma_raw, ln_gamma_raw, EULER_GAMMA, LAMBDA_0};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

/// Tail-budget targets for a p-value simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum McTarget {
    /// Both tails budgeted at 1 - alpha, the comparison the analytic
    /// accuracy study uses.
    Alpha(f64),
    /// Explicit half-widths for the two exponents.
    HalfWidths { x_d: f64, x_u: f64 },
}

/// One Monte Carlo configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub r0: u8,
    pub c0: u16,
    pub z0: u8,
    pub f0: u64,
    pub target: McTarget,
    pub samples: u32,
    pub seed: u64,
}

/// Summary of one simulated statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McReport {
    pub mean: f64,
    pub stddev: f64,
    /// 3-sigma confidence interval for the mean (stderr-based).
    pub ci3sigma_lo: f64,
    pub ci3sigma_hi: f64,
    /// The Gamma-form analytic value the statistic is compared against.
    pub analytic_value: f64,
    pub samples: u32,
    pub seed: u64,
    /// Samples whose minimizer hit the search-window edge.
    pub boundary_hits: u64,
}

/// Result of minimizing one finite Chernoff product.
#[derive(Debug, Clone, Copy)]
pub struct ChernoffMin {
    /// ln of the minimum product.
    pub log_value: f64,
    /// The minimum product itself (may underflow to 0; see `log_value`).
    pub value: f64,
    /// Minimizing t.
    pub t: f64,
    /// The minimum sat on the search-window boundary.
    pub boundary: bool,
}

const T_FLOOR: f64 = 1e-8;
/// Upper edge of the minus-side t window; the log-objective is convex, so
/// a flagged boundary hit is the only way mass can hide beyond it.
const T_CEIL_MINUS: f64 = 50.0;

/// Cumulative harmonic numbers H(0..=max).
struct HarmonicTable {
    values: Vec<f64>,
}

impl HarmonicTable {
    fn up_to(max: u32) -> Self {
        let mut values = Vec::with_capacity(max as usize + 1);
        values.push(0.0);
        let mut sum = 0.0;
        let mut compensation = 0.0;
        for j in 1..=max {
            let term = 1.0 / j as f64;
            let y = term - compensation;
            let t = sum + y;
            compensation = (t - sum) - y;
            sum = t;
            values.push(sum);
        }
        HarmonicTable { values }
    }

    #[inline]
    fn get(&self, m: u32) -> f64 {
        self.values[m as usize]
    }
}

/// ln of prod_registers e^{-t x} prod_{j<=m} e^{-+t/j}/(1 -+ t/j), via the
/// factorial-ratio identity sum_{j<=m} ln(1 -+ t/j) =
/// ln Gamma(m+1 -+ t) - ln Gamma(1 -+ t) - ln Gamma(m+1).
fn log_objective(occupancy: &[u32], table: &HarmonicTable, x: f64, side: TailSide, t: f64) -> f64 {
    let a0 = occupancy.len() as f64;
    let sgn = match side {
        TailSide::Plus => 1.0,
        TailSide::Minus => -1.0,
    };
    let mut sum = -t * a0 * x;
    for &m in occupancy {
        if m == 0 {
            continue;
        }
        let mf = m as f64;
        sum += -sgn * t * table.get(m) - ln_gamma_raw(mf + 1.0 - sgn * t)
            + ln_gamma_raw(1.0 - sgn * t)
            + ln_gamma_raw(mf + 1.0);
    }
    sum
}

/// d/dt of [`log_objective`].
fn log_objective_d1(
    occupancy: &[u32],
    table: &HarmonicTable,
    x: f64,
    side: TailSide,
    t: f64,
) -> f64 {
    let a0 = occupancy.len() as f64;
    let sgn = match side {
        TailSide::Plus => 1.0,
        TailSide::Minus => -1.0,
    };
    let mut sum = -a0 * x;
    for &m in occupancy {
        if m == 0 {
            continue;
        }
        let mf = m as f64;
        sum += -sgn * table.get(m) + sgn * digamma_raw(mf + 1.0 - sgn * t)
            - sgn * digamma_raw(1.0 - sgn * t);
    }
    sum
}

fn minimize(
    occupancy: &[u32],
    table: &HarmonicTable,
    x: f64,
    side: TailSide,
) -> ChernoffMin {
    let (lo, hi) = match side {
        TailSide::Plus => (T_FLOOR, 1.0 - T_FLOOR),
        TailSide::Minus => (T_FLOOR, T_CEIL_MINUS),
    };
    let value_at = |t: f64| log_objective(occupancy, table, x, side, t);
    let slope_at = |t: f64| log_objective_d1(occupancy, table, x, side, t);

    // The log-objective is convex in t, so the boundary slopes decide
    // whether the minimum is interior.
    if slope_at(lo) >= 0.0 {
        let log_value = value_at(lo);
        return ChernoffMin { log_value, value: log_value.exp(), t: lo, boundary: true };
    }
    if slope_at(hi) <= 0.0 {
        let log_value = value_at(hi);
        return ChernoffMin { log_value, value: log_value.exp(), t: hi, boundary: true };
    }

    // Golden-section collapse, then slope-based refinement inside the
    // final interval.
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = value_at(c);
    let mut fd = value_at(d);
    for _ in 0..40 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = value_at(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = value_at(d);
        }
        if (b - a) <= 1e-8 * b.max(1.0) {
            break;
        }
    }
    let mut t = 0.5 * (a + b);
    for _ in 0..20 {
        let slope = slope_at(t);
        // curvature from a slope difference; cheaper than a trigamma pass
        let h = 1e-6 * t.max(1e-3);
        let curvature = (slope_at(t + h) - slope_at(t - h)) / (2.0 * h);
        if !curvature.is_finite() || curvature <= 0.0 {
            break;
        }
        let next = (t - slope / curvature).clamp(lo, hi);
        if (next - t).abs() <= 1e-13 * t.max(1.0) {
            t = next;
            break;
        }
        t = next;
    }
    let log_value = value_at(t);
    ChernoffMin { log_value, value: log_value.exp(), t, boundary: false }
}

/// Minimum over t of the exact finite Chernoff product for one occupancy
/// matrix (flattened; entry order does not matter) at exponent offset x.
/// t ranges over (0,1) on the plus side and (0, 50] on the minus side.
pub fn exact_chernoff_min(occupancy: &[u32], x: f64, side: TailSide) -> Result<ChernoffMin> {
    if occupancy.is_empty() {
        return Err(Error::domain("exact_chernoff_min", "occupancy matrix is empty".to_string()));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("exact_chernoff_min", format!("x must be > 0, got {x}")));
    }
    let max_m = occupancy.iter().copied().max().unwrap_or(0);
    let table = HarmonicTable::up_to(max_m);
    Ok(minimize(occupancy, &table, x, side))
}

/// Per-sample RNG: a fresh counter-based generator on a substream keyed by
/// (seed, sample index) through a SplitMix64 scramble.
fn substream(seed: u64, index: u64) -> ChaCha12Rng {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x1234_5678_9ABC_DEF1);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    ChaCha12Rng::seed_from_u64(z)
}

/// F0 balls into 2^r0 bins, independently per column, by per-ball uniform
/// assignment.
fn sample_occupancy(rng: &mut ChaCha12Rng, f0: u64, r0: u8, c0: u16, out: &mut [u32]) {
    out.fill(0);
    let rows = 1usize << r0;
    for col in 0..c0 as usize {
        let base = col * rows;
        if r0 == 0 {
            out[base] = f0 as u32;
            continue;
        }
        let shift = 32 - r0 as u32;
        for _ in 0..f0 {
            let bin = (rng.next_u32() >> shift) as usize;
            out[base + bin] += 1;
        }
    }
}

fn aggregate(values: &[f64], analytic: f64, samples: u32, seed: u64, boundary: u64) -> McReport {
    let n = values.len() as f64;
    let mut sum = 0.0;
    let mut compensation = 0.0;
    for &v in values {
        let y = v - compensation;
        let t = sum + y;
        compensation = (t - sum) - y;
        sum = t;
    }
    let mean = sum / n;
    let mut ss = 0.0;
    for &v in values {
        ss += (v - mean) * (v - mean);
    }
    let stddev = if values.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
    let stderr3 = 3.0 * stddev / n.sqrt();
    McReport {
        mean,
        stddev,
        ci3sigma_lo: mean - stderr3,
        ci3sigma_hi: mean + stderr3,
        analytic_value: analytic,
        samples,
        seed,
        boundary_hits: boundary,
    }
}

fn resolve_targets(cfg: &McConfig) -> Result<(f64, f64, f64, f64)> {
    let a0 = SketchParams::new(cfg.r0, cfg.c0, cfg.z0)?.a0();
    match cfg.target {
        McTarget::Alpha(alpha) => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::domain("simulate_pvalues", format!("alpha out of range: {alpha}")));
            }
            let p = 1.0 - alpha;
            let x_d = ci::halfwidth_from_tail(p, a0, TailSide::Plus)?;
            let x_u = ci::halfwidth_from_tail(p, a0, TailSide::Minus)?;
            Ok((x_d, x_u, p, p))
        }
        McTarget::HalfWidths { x_d, x_u } => {
            let p_plus = ci::tail_from_halfwidth(x_d, a0, TailSide::Plus)?;
            let p_minus = ci::tail_from_halfwidth(x_u, a0, TailSide::Minus)?;
            Ok((x_d, x_u, p_plus, p_minus))
        }
    }
}

/// Simulates the exact Chernoff minima for multinomial occupancies and
/// summarizes them against the Gamma-form targets. Returns the upward
/// (plus) report first.
pub fn simulate_pvalues(cfg: &McConfig) -> Result<(McReport, McReport)> {
    if cfg.samples == 0 {
        return Err(Error::domain("simulate_pvalues", "samples must be >= 1".to_string()));
    }
    let params = SketchParams::new(cfg.r0, cfg.c0, cfg.z0)?;
    let (x_d, x_u, p_plus, p_minus) = resolve_targets(cfg)?;
    let rows = params.rows();
    let len = rows * cfg.c0 as usize;
    let table = HarmonicTable::up_to(cfg.f0 as u32);

    let results: Vec<(f64, f64, bool)> = (0..cfg.samples as u64)
        .into_par_iter()
        .map_init(
            || vec![0u32; len],
            |occupancy, idx| {
                let mut rng = substream(cfg.seed, idx);
                sample_occupancy(&mut rng, cfg.f0, cfg.r0, cfg.c0, occupancy);
                let plus = minimize(occupancy, &table, x_d, TailSide::Plus);
                let minus = minimize(occupancy, &table, x_u, TailSide::Minus);
                (plus.value, minus.value, plus.boundary || minus.boundary)
            },
        )
        .collect();

    let boundary = results.iter().filter(|r| r.2).count() as u64;
    let plus_values: Vec<f64> = results.iter().map(|r| r.0).collect();
    let minus_values: Vec<f64> = results.iter().map(|r| r.1).collect();
    Ok((
        aggregate(&plus_values, p_plus, cfg.samples, cfg.seed, boundary),
        aggregate(&minus_values, p_minus, cfg.samples, cfg.seed, boundary),
    ))
}

/// Full-pipeline coverage: synthetic distinct objects, sketch, query,
/// interval, count how often the true count lands inside. The analytic
/// value is the guaranteed level alpha.
pub fn coverage_experiment(cfg: &McConfig, spec: IntervalSpec) -> Result<McReport> {
    if cfg.samples == 0 {
        return Err(Error::domain("coverage_experiment", "samples must be >= 1".to_string()));
    }
    let params = SketchParams::new(cfg.r0, cfg.c0, cfg.z0)?;
    let alpha = match spec {
        IntervalSpec::OneSidedUpper { alpha }
        | IntervalSpec::OneSidedLower { alpha }
        | IntervalSpec::TwoSided { alpha, .. }
        | IntervalSpec::TwoSidedMinLen { alpha } => alpha,
    };
    let hits: Vec<f64> = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|idx| {
            let mut rng = substream(cfg.seed, idx);
            let nonce: u64 = rng.random();
            let mut sketch = Sketch::new(params);
            let mut token = [0u8; 16];
            token[..8].copy_from_slice(&nonce.to_le_bytes());
            for i in 0..cfg.f0 {
                token[8..].copy_from_slice(&i.to_le_bytes());
                sketch.insert(&token);
            }
            let q = sketch.query();
            let interval = ci::interval(&q, params, spec).expect("interval on simulated data");
            let f0 = cfg.f0 as f64;
            if interval.lower <= f0 && f0 <= interval.upper {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(aggregate(&hits, alpha, cfg.samples, cfg.seed, 0))
}

/// One row of the extreme-value MGF comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GumbelRow {
    pub f0: u64,
    /// s expressed as a fraction of lambda_0.
    pub s_fraction: f64,
    pub mgf_empirical: f64,
    pub stderr: f64,
    /// Gamma(1 - s/lambda_0) e^{-gamma s/lambda_0}, the limit MGF.
    pub gumbel_limit: f64,
}

/// Empirical MGF of the centered register maximum against its Gumbel
/// limit, across a grid of true counts. Samples share their underlying
/// uniforms across the grid (common random numbers), so the growth of the
/// MGF in F0 is measurable far below the single-point noise level.
pub fn gumbel_mgf_check(
    f0_grid: &[u64],
    s_fractions: &[f64],
    samples: u32,
    seed: u64,
) -> Result<Vec<GumbelRow>> {
    if samples == 0 {
        return Err(Error::domain("gumbel_mgf_check", "samples must be >= 1".to_string()));
    }
    for &frac in s_fractions {
        if !(frac >= 0.0 && frac < 1.0) {
            return Err(Error::domain(
                "gumbel_mgf_check",
                format!("s/lambda_0 must lie in [0,1), got {frac}"),
            ));
        }
    }
    let per_sample: Vec<Vec<f64>> = (0..samples as u64)
        .into_par_iter()
        .map(|idx| {
            let mut rng = substream(seed, idx);
            let u: f64 = rng.random();
            let ln_u = u.ln();
            let mut row = Vec::with_capacity(f0_grid.len() * s_fractions.len());
            for &f0 in f0_grid {
                // max of f0 unit-uniform summaries: -log2(min of f0 uniforms)
                let min_u = -f64::exp_m1(ln_u / f0 as f64);
                let y_bar = -min_u.log2();
                let centered = y_bar - (digamma_raw(f0 as f64 + 1.0) + EULER_GAMMA) / LAMBDA_0;
                for &frac in s_fractions {
                    row.push((frac * LAMBDA_0 * centered).exp());
                }
            }
            row
        })
        .collect();

    let mut rows = Vec::new();
    for (i, &f0) in f0_grid.iter().enumerate() {
        for (j, &frac) in s_fractions.iter().enumerate() {
            let k = i * s_fractions.len() + j;
            let values: Vec<f64> = per_sample.iter().map(|r| r[k]).collect();
            let report = aggregate(&values, 0.0, samples, seed, 0);
            let gumbel_limit = if frac == 0.0 {
                1.0
            } else {
                (ln_gamma_raw(1.0 - frac) - EULER_GAMMA * frac).exp()
            };
            rows.push(GumbelRow {
                f0,
                s_fraction: frac,
                mgf_empirical: report.mean,
                stderr: report.stddev / (samples as f64).sqrt(),
                gumbel_limit,
            });
        }
    }
    Ok(rows)
}
