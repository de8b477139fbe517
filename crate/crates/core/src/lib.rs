//! Distinct-count estimation with exact confidence intervals.
//!
//! The crate stores a stream in a pair of register matrices (a HyperLogLog
//! generalization carrying extra mantissa bits), reads a log-scale summary
//! back out, and wraps the unknown distinct count in non-asymptotic
//! confidence intervals obtained from Chernoff bounds on maxima of
//! exponential random variables. The interval machinery rests on a small
//! special-function library and bracketed Halley solvers; a Monte Carlo
//! harness validates both.
//!
//! ```
//! use fmci_core::{Sketch, SketchParams};
//! use fmci_core::ci::{interval, IntervalSpec};
//!
//! let params = SketchParams::new(4, 4, 4).unwrap();
//! let mut sketch = Sketch::new(params);
//! for i in 0..10_000u32 {
//!     sketch.insert(format!("user-{i}").as_bytes());
//! }
//! let bounds = interval(
//!     &sketch.query(),
//!     params,
//!     IntervalSpec::TwoSided { alpha: 0.95, split: 0.5 },
//! )
//! .unwrap();
//! assert!(bounds.lower <= 10_000.0 && 10_000.0 <= bounds.upper);
//! ```

pub mod ci;
pub mod error;
pub mod hashing;
pub mod mc;
pub mod sketch;
pub mod solvers;
pub mod specfun;

pub use ci::{Interval, IntervalSpec};
pub use error::{Error, Result};
pub use sketch::{QueryResult, Sketch, SketchParams};
