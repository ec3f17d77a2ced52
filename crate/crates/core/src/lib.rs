//! Expected number of real zeros of Gaussian random algebraic polynomials
//! `P(x) = sum_{i<n} a_i x^i` with `Var(a_i) = sigma^(2i)` and dependent coefficients.
//!
//! Two independent routes are provided: exact Kac-Rice integration
//! ([`integrator::expected_zeros`]) and Monte Carlo root counting
//! ([`simulator::run_simulation`]).

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod float_serde;
pub mod integrator;
pub mod model;
pub mod moments;
pub mod simulator;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};
pub use model::{ModelKind, ModelSpec};

/// An open interval `(lo, hi)` of the real line; endpoints may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "float_serde")]
    pub lo: f64,
    #[serde(with = "float_serde")]
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    /// `(-inf, -1)`, `(-1, 0)`, `(0, 1)`, `(1, inf)`.
    pub const UNIT_SECTORS: [Interval; 4] = [
        Interval::new(f64::NEG_INFINITY, -1.0),
        Interval::new(-1.0, 0.0),
        Interval::new(0.0, 1.0),
        Interval::new(1.0, f64::INFINITY),
    ];

    pub fn unit_sectors_vec() -> Vec<Interval> {
        Self::UNIT_SECTORS.to_vec()
    }

    pub const WHOLE_LINE: Interval = Interval::new(f64::NEG_INFINITY, f64::INFINITY);
}
