//! Breakpoints that isolate the integrand's features on `[-1/sigma, 1/sigma]`:
//! the `u = rho` neighbourhood and the peak of width `~1/n` at `|u| = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;

/// `epsilon(n) = n^(-a)` with `a = 1 - ln(ln(n^10)) / ln n`; equals `10 ln n / n`.
///
/// Fails with `PartitionDegenerate` when `a` leaves `(0, 1)`, i.e. `n <= 35`.
pub fn epsilon_of(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::PartitionDegenerate { n, a: f64::NAN });
    }
    let ln_n = (n as f64).ln();
    let a = 1.0 - (10.0 * ln_n).ln() / ln_n;
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::PartitionDegenerate { n, a });
    }
    Ok((-a * ln_n).exp())
}

/// `eta(n) = exp(-(ln n)^(1/3))`.
pub fn eta_of(n: usize) -> f64 {
    assert!(n >= 2, "eta_of needs n >= 2");
    (-(n as f64).ln().cbrt()).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionScheme {
    pub n: usize,
    pub sigma: f64,
    pub rho: f64,
    pub epsilon: Option<f64>,
    pub eta: Option<f64>,
    /// Set when the asymptotic partition was replaced by dyadic refinement.
    pub fallback: bool,
    pub breakpoints_pos: Vec<f64>,
    pub breakpoints_neg: Vec<f64>,
}

impl PartitionScheme {
    pub fn all_breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.breakpoints_neg.iter().chain(&self.breakpoints_pos).copied()
    }
}

fn clamp_sort_merge(points: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    let merge_tol = 1e-14 * (hi - lo).abs();
    let mut pts: Vec<f64> = points.into_iter().map(|p| p.clamp(lo, hi)).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|b, a| (*b - *a).abs() <= merge_tol);
    pts
}

pub fn breakpoints(spec: &ModelSpec) -> PartitionScheme {
    let n = spec.n;
    let s = spec.sigma;
    let nf = n as f64;
    let edge = 1.0 / s;

    let eps = epsilon_of(n).ok();
    let eta = (n >= 2).then(|| eta_of(n));

    let (pos, neg, fallback) = match (eps, eta) {
        (Some(e), Some(h)) if e < h => {
            // No pole when rho = 0: the neighbourhood pair collapses onto the origin.
            let (near_lo, near_hi) = if spec.rho > 0.0 {
                (spec.rho / s - 1.0 / (nf * s), spec.rho / s + 1.0 / (nf * s))
            } else {
                (0.0, 0.0)
            };
            let pos = vec![0.0, near_lo, near_hi, 0.5 / s, (1.0 - h) / s, (1.0 - e) / s, edge];
            let neg = vec![-edge, (-1.0 + e) / s, (-1.0 + h) / s, -0.5 / s, 0.0];
            (pos, neg, false)
        }
        _ => {
            let mut pos = vec![0.0, 0.5 / s, edge];
            let levels = (nf.max(2.0)).log2().ceil() as i32 + 1;
            pos.extend((2..=levels).map(|k| (1.0 - 0.5_f64.powi(k)) / s));
            let neg = pos.iter().map(|p| -p).collect();
            (pos, neg, true)
        }
    };

    PartitionScheme {
        n,
        sigma: s,
        rho: spec.rho,
        epsilon: eps,
        eta,
        fallback,
        breakpoints_pos: clamp_sort_merge(pos, 0.0, edge),
        breakpoints_neg: clamp_sort_merge(neg, -edge, 0.0),
    }
}
