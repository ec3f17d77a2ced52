//! Expected real-zero counts by adaptive quadrature of the Kac-Rice integrand.
//!
//! The working range of a model is `|sigma x| <= 1`. Zeros with `|x| > 1/sigma`
//! are zeros of the index-reversed polynomial `t^(n-1) P(1/t)`, whose model is
//! [`reverse_model`]; its integrand is scale free, so the covariance factor of the
//! reversal drops out and the tails are integrated over `|t| < sigma` instead.

pub mod partition;
pub mod quadrature;

pub use partition::{breakpoints, epsilon_of, eta_of, PartitionScheme};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::float_serde;
use crate::model::{reverse_model, ModelSpec};
use crate::moments::integrand;
use quadrature::{integrate_pieces, QuadSettings};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const MAX_DEPTH: u32 = 60;
const MAX_EVALS: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalResult {
    #[serde(with = "float_serde")]
    pub a: f64,
    #[serde(with = "float_serde")]
    pub b: f64,
    pub value: f64,
    pub err_est: f64,
    pub evals: usize,
    #[serde(default)]
    pub max_depth_hit: bool,
}

/// Counts split at `x = +-1/sigma`, the boundary of the working range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitTotals {
    pub below_neg_edge: f64,
    pub neg_edge_to_0: f64,
    pub zero_to_pos_edge: f64,
    pub above_pos_edge: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedZeroReport {
    pub spec: ModelSpec,
    pub tol: f64,
    /// Integration pieces in the model's own `x` coordinate, sorted by left endpoint.
    pub per_interval: Vec<IntervalResult>,
    pub en_minf_m1: f64,
    pub en_m1_0: f64,
    pub en_0_1: f64,
    pub en_1_inf: f64,
    pub en_total: f64,
    pub err_est_total: f64,
    pub edge_split: SplitTotals,
    /// `EN(0, inf) - EN(-inf, 0)`.
    pub half_line_asymmetry: f64,
    pub max_depth_hit: bool,
}

impl ExpectedZeroReport {
    /// Sector values keyed by their `x`-space interval, in ascending order.
    pub fn sectors(&self) -> [((f64, f64), f64); 4] {
        [
            ((f64::NEG_INFINITY, -1.0), self.en_minf_m1),
            ((-1.0, 0.0), self.en_m1_0),
            ((0.0, 1.0), self.en_0_1),
            ((1.0, f64::INFINITY), self.en_1_inf),
        ]
    }

    pub fn sector_err(&self, lo: f64, hi: f64) -> f64 {
        self.per_interval.iter().filter(|p| p.a >= lo && p.b <= hi).map(|p| p.err_est).sum()
    }
}

fn settings(tol: f64) -> QuadSettings {
    QuadSettings { tol, max_depth: MAX_DEPTH, max_evals: MAX_EVALS }
}

fn check_range(spec: &ModelSpec, a: f64, b: f64, tol: f64) -> Result<()> {
    spec.check()?;
    let edge = (1.0 / spec.sigma) * (1.0 + 1e-12);
    if !(a <= b && a >= -edge && b <= edge) {
        return Err(Error::Precondition(format!(
            "[{a}, {b}] is not inside the working range [-1/sigma, 1/sigma] = [{}, {}]",
            -1.0 / spec.sigma,
            1.0 / spec.sigma
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("tol must be > 0, got {tol}")));
    }
    Ok(())
}

/// Initial subdivision of `[a, b]`: partition breakpoints, caller-supplied splits
/// and the points at distance `1/(n sigma)` from the edges where the peak sits.
fn initial_points(spec: &ModelSpec, a: f64, b: f64, extra: &[f64]) -> Vec<f64> {
    let scheme = breakpoints(spec);
    let near_edge = (1.0 - 1.0 / spec.n as f64) / spec.sigma;
    let mut pts = vec![a, b];
    pts.extend(
        scheme
            .all_breakpoints()
            .chain(extra.iter().copied())
            .chain([near_edge, -near_edge])
            .filter(|&p| p > a && p < b),
    );
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn integrate_from_points(spec: &ModelSpec, pts: &[f64], tol: f64) -> Result<Vec<IntervalResult>> {
    let f = |x: f64| integrand(spec, x).unwrap_or(f64::NAN);
    let sums = integrate_pieces(f, pts, settings(tol));
    let mut out = Vec::with_capacity(sums.len());
    for (w, s) in pts.windows(2).zip(sums) {
        if !s.value.is_finite() {
            return Err(Error::Precondition(format!("integrand is not finite on [{}, {}] for {spec}", w[0], w[1])));
        }
        out.push(IntervalResult {
            a: w[0],
            b: w[1],
            value: s.value.max(0.0),
            err_est: s.err,
            evals: s.evals,
            max_depth_hit: s.max_depth_hit,
        });
    }
    Ok(out)
}

/// `EN(a, b)` for `[a, b]` inside the working range `[-1/sigma, 1/sigma]`.
pub fn integrate_interval(spec: &ModelSpec, a: f64, b: f64, tol: f64) -> Result<IntervalResult> {
    check_range(spec, a, b, tol)?;
    if a == b {
        return Ok(IntervalResult { a, b, value: 0.0, err_est: 0.0, evals: 0, max_depth_hit: false });
    }
    let pieces = integrate_from_points(spec, &initial_points(spec, a, b, &[]), tol)?;
    Ok(IntervalResult {
        a,
        b,
        value: pieces.iter().map(|p| p.value).sum(),
        err_est: pieces.iter().map(|p| p.err_est).sum(),
        evals: pieces.iter().map(|p| p.evals).sum(),
        max_depth_hit: pieces.iter().any(|p| p.max_depth_hit),
    })
}

#[derive(Debug, Clone, Copy)]
enum Region {
    NegInner,
    PosInner,
    NegOuter,
    PosOuter,
}

/// Maps a piece of a region's working coordinate back to `x` of the original model.
fn to_original(region: Region, lo: f64, hi: f64) -> (f64, f64) {
    match region {
        Region::NegInner | Region::PosInner => (lo, hi),
        // t in (lo, hi) with lo >= 0  <=>  x = 1/t in (1/hi, 1/lo)
        Region::PosOuter => (1.0 / hi, if lo == 0.0 { f64::INFINITY } else { 1.0 / lo }),
        // t in (lo, hi) with hi <= 0  <=>  x = 1/t in (1/hi, 1/lo)
        Region::NegOuter => (if hi == 0.0 { f64::NEG_INFINITY } else { 1.0 / hi }, 1.0 / lo),
    }
}

/// Expected number of real zeros over the whole line, with per-sector totals.
pub fn expected_zeros(spec: &ModelSpec, tol: f64) -> Result<ExpectedZeroReport> {
    spec.check()?;
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("tol must be > 0, got {tol}")));
    }
    let (reversed, _scale) = reverse_model(spec);
    let inner_edge = 1.0 / spec.sigma;
    let outer_edge = spec.sigma;

    // x = +-1 lies in the inner range when sigma < 1 and in the reversed range otherwise.
    let regions = [
        (Region::NegInner, *spec, -inner_edge, 0.0, -1.0),
        (Region::PosInner, *spec, 0.0, inner_edge, 1.0),
        (Region::NegOuter, reversed, -outer_edge, 0.0, -1.0),
        (Region::PosOuter, reversed, 0.0, outer_edge, 1.0),
    ];

    let results: Vec<Vec<IntervalResult>> = regions
        .par_iter()
        .map(|&(region, model, lo, hi, split)| {
            let pts = initial_points(&model, lo, hi, &[split]);
            let pieces = integrate_from_points(&model, &pts, tol)?;
            Ok(pieces
                .into_iter()
                .map(|p| {
                    let (a, b) = to_original(region, p.a, p.b);
                    IntervalResult { a, b, ..p }
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let region_total = |k: usize| -> f64 { results[k].iter().map(|p| p.value).sum() };
    let edge_split = SplitTotals {
        neg_edge_to_0: region_total(0),
        zero_to_pos_edge: region_total(1),
        below_neg_edge: region_total(2),
        above_pos_edge: region_total(3),
    };

    let mut per_interval: Vec<IntervalResult> = results.into_iter().flatten().collect();
    per_interval.sort_by(|x, y| x.a.total_cmp(&y.a));

    let mut sectors = [0.0; 4];
    for p in &per_interval {
        let k = if p.b <= -1.0 {
            0
        } else if p.b <= 0.0 {
            1
        } else if p.b <= 1.0 {
            2
        } else {
            3
        };
        sectors[k] += p.value;
    }
    let [en_minf_m1, en_m1_0, en_0_1, en_1_inf] = sectors;

    Ok(ExpectedZeroReport {
        spec: *spec,
        tol,
        en_minf_m1,
        en_m1_0,
        en_0_1,
        en_1_inf,
        en_total: en_minf_m1 + en_m1_0 + en_0_1 + en_1_inf,
        err_est_total: per_interval.iter().map(|p| p.err_est).sum(),
        edge_split,
        half_line_asymmetry: (en_0_1 + en_1_inf) - (en_minf_m1 + en_m1_0),
        max_depth_hit: per_interval.iter().any(|p| p.max_depth_hit),
        per_interval,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelKind;

    fn spec(kind: ModelKind, n: usize, sigma: f64, rho: f64) -> ModelSpec {
        ModelSpec::new(kind, n, sigma, rho).unwrap()
    }

    #[test]
    fn linear_polynomial_has_one_zero() {
        for kind in ModelKind::ALL {
            for sigma in [1.0, 2.0, 0.3] {
                for rho in [0.0, 0.25] {
                    let r = expected_zeros(&spec(kind, 2, sigma, rho), DEFAULT_TOL).unwrap();
                    assert!((r.en_total - 1.0).abs() < 1e-6, "{kind} {sigma} {rho}: {}", r.en_total);
                }
            }
        }
    }

    #[test]
    fn linear_inner_plus_reversed_tails() {
        let s = spec(ModelKind::GeometricNeg, 2, 2.0, 0.25);
        let inner = integrate_interval(&s, -0.5, 0.5, DEFAULT_TOL).unwrap();
        let (rev, _) = reverse_model(&s);
        let tails = integrate_interval(&rev, -2.0, 2.0, DEFAULT_TOL).unwrap();
        assert!((inner.value + tails.value - 1.0).abs() < 1e-7);
    }

    #[test]
    fn constant_polynomial_has_none() {
        let s = spec(ModelKind::Independent, 1, 1.0, 0.0);
        assert_eq!(integrate_interval(&s, -1.0, 1.0, DEFAULT_TOL).unwrap().value, 0.0);
        assert_eq!(expected_zeros(&s, DEFAULT_TOL).unwrap().en_total, 0.0);
    }

    #[test]
    fn rejects_intervals_outside_working_range() {
        let s = spec(ModelKind::Independent, 5, 2.0, 0.0);
        assert!(integrate_interval(&s, 0.0, 0.6, 1e-8).is_err());
        assert!(integrate_interval(&s, 0.4, 0.1, 1e-8).is_err());
        assert!(integrate_interval(&s, 0.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn pieces_tile_the_line() {
        for sigma in [0.5, 1.0, 2.0] {
            let r = expected_zeros(&spec(ModelKind::GeometricNeg, 40, sigma, 0.2), DEFAULT_TOL).unwrap();
            let p = &r.per_interval;
            assert_eq!(p[0].a, f64::NEG_INFINITY);
            assert_eq!(p.last().unwrap().b, f64::INFINITY);
            for w in p.windows(2) {
                assert!((w[0].b - w[1].a).abs() <= 1e-12 * w[0].b.abs().max(1.0), "{:?}", w);
            }
            assert!(p.iter().any(|q| q.b == 1.0) && p.iter().any(|q| q.a == -1.0));
            let s = r.edge_split;
            let by_edge = s.below_neg_edge + s.neg_edge_to_0 + s.zero_to_pos_edge + s.above_pos_edge;
            assert!((by_edge - r.en_total).abs() < 1e-12);
            assert!(r.sectors().iter().all(|(_, v)| *v >= 0.0));
        }
    }

    #[test]
    fn sigma_only_rescales_the_line() {
        let a = expected_zeros(&spec(ModelKind::GeometricNeg, 100, 2.0, 0.2), DEFAULT_TOL).unwrap();
        let b = expected_zeros(&spec(ModelKind::GeometricNeg, 100, 1.0, 0.2), DEFAULT_TOL).unwrap();
        assert!((a.en_total - b.en_total).abs() < 1e-6);
    }

    #[test]
    fn report_json_round_trip() {
        let r = expected_zeros(&spec(ModelKind::GeometricNeg, 20, 1.5, 0.2), DEFAULT_TOL).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"-inf\"") && json.contains("\"inf\""));
        let back: ExpectedZeroReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
