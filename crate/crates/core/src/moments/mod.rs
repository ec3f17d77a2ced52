//! Second moments of `P(x)` and `P'(x)` and the Kac-Rice integrand.
//!
//! With `u = sigma * x` every model reduces to its unit-variance twin evaluated at `u`:
//!
//! ```text
//! A^2 = Var P(x)        = sum_ij r_ij u^(i+j)
//! B^2 = Var P'(x)       = sigma^2 sum_ij i j r_ij u^(i+j-2)
//! C   = Cov(P(x),P'(x)) = sigma   sum_ij j r_ij u^(i+j-1)
//! ```
//!
//! and the expected number of zeros on `(a, b)` is the integral of
//! `sqrt(A^2 B^2 - C^2) / (pi A^2)`.

pub mod closed_form;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelKind, ModelSpec};

/// Models with more coefficients than this must keep `|sigma x| <= 1 + 64/n`.
const SMALL_N: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPoint {
    pub x: f64,
    pub u: f64,
    #[serde(rename = "A2")]
    pub a2: f64,
    #[serde(rename = "B2")]
    pub b2: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "Delta2")]
    pub delta2: f64,
    pub integrand: f64,
}

impl MomentPoint {
    fn from_moments(x: f64, u: f64, a2: f64, b2: f64, c: f64) -> Self {
        let delta2 = a2 * b2 - c * c;
        let integrand = if a2 > 0.0 { delta2.max(0.0).sqrt() / (PI * a2) } else { 0.0 };
        MomentPoint { x, u, a2, b2, c, delta2, integrand }
    }
}

fn overflow_guard(spec: &ModelSpec, x: f64) -> Result<f64> {
    let u = spec.sigma * x;
    if !u.is_finite() || (spec.n > SMALL_N && u.abs() > 1.0 + 64.0 / spec.n as f64) {
        return Err(Error::OverflowRisk { u, n: spec.n });
    }
    Ok(u)
}

/// Reference evaluation by literal double summation, `O(n^2)`.
pub fn moments_direct(spec: &ModelSpec, x: f64) -> Result<MomentPoint> {
    let u = overflow_guard(spec, x)?;
    let n = spec.n;
    let pow: Vec<f64> = (0..2 * n).map(|k| u.powi(k as i32)).collect();
    // every supported correlation depends on the lag only
    let corr: Vec<f64> = (0..n).map(|lag| spec.correlation(0, lag)).collect();

    let (mut a2, mut b2, mut c) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let r = corr[i.abs_diff(j)];
            if r == 0.0 {
                continue;
            }
            a2 += r * pow[i + j];
            if i >= 1 && j >= 1 {
                b2 += (i * j) as f64 * r * pow[i + j - 2];
            }
            if j >= 1 {
                c += j as f64 * r * pow[i + j - 1];
            }
        }
    }
    let s = spec.sigma;
    Ok(MomentPoint::from_moments(x, u, a2, s * s * b2, s * c))
}

/// `O(n)` evaluation.
///
/// For `r_ij = w * lambda^(|i-j|)`-type kernels the off-diagonal sums collapse onto
/// running accumulators `F_i = sum_{j<i} k(i,j) u^j` and `G_i = sum_{j<i} k(i,j) j u^(j-1)`,
/// updated as `F_i = lambda (F_{i-1} + u^(i-1))`.
pub fn moments_fast(spec: &ModelSpec, x: f64) -> Result<MomentPoint> {
    let u = overflow_guard(spec, x)?;
    let (weight, decay) = match spec.kind {
        ModelKind::Independent => (0.0, 0.0),
        ModelKind::ConstantCorr => (spec.rho, 1.0),
        ModelKind::GeometricPos => (1.0, spec.rho),
        ModelKind::GeometricNeg => (-1.0, spec.rho),
    };

    let (mut diag_a, mut diag_b, mut diag_c) = (0.0, 0.0, 0.0);
    let (mut off_a, mut off_b, mut off_c) = (0.0, 0.0, 0.0);
    let (mut f, mut g) = (0.0, 0.0);
    // u^(i-1) and i u^(i-1) of the previous index
    let (mut v_prev, mut d_prev) = (0.0, 0.0);
    let mut v = 1.0;
    for i in 0..spec.n {
        let d = if i == 0 { 0.0 } else { i as f64 * v_prev };
        if i > 0 {
            f = decay * (f + v_prev);
            g = decay * (g + d_prev);
        }
        diag_a += v * v;
        diag_b += d * d;
        diag_c += v * d;
        off_a += v * f;
        off_b += d * g;
        off_c += v * g + d * f;

        v_prev = v;
        d_prev = d;
        v *= u;
    }
    let a2 = diag_a + 2.0 * weight * off_a;
    let b2 = diag_b + 2.0 * weight * off_b;
    let c = diag_c + weight * off_c;
    let s = spec.sigma;
    Ok(MomentPoint::from_moments(x, u, a2, s * s * b2, s * c))
}

/// Kac-Rice integrand `Delta / (pi A^2)` through the fast path.
pub fn integrand(spec: &ModelSpec, x: f64) -> Result<f64> {
    moments_fast(spec, x).map(|m| m.integrand)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_covariance;
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn spec(kind: ModelKind, n: usize, sigma: f64, rho: f64) -> ModelSpec {
        ModelSpec::new(kind, n, sigma, rho).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn linear_model_at_zero() {
        let s = spec(ModelKind::GeometricNeg, 2, 2.0, 0.25);
        for m in [moments_direct(&s, 0.0).unwrap(), moments_fast(&s, 0.0).unwrap()] {
            assert_eq!(m.a2, 1.0);
            assert_eq!(m.b2, 4.0);
            assert_eq!(m.c, -0.5);
            assert_eq!(m.delta2, 3.75);
            assert!((m.integrand - 3.75_f64.sqrt() / PI).abs() < 1e-15);
            assert!((m.integrand - 0.61637).abs() < 1e-4);
        }
    }

    #[test]
    fn linear_model_at_unit_u() {
        let s = spec(ModelKind::GeometricNeg, 2, 2.0, 0.25);
        assert_eq!(moments_direct(&s, 0.5).unwrap().a2, 1.5);
        assert_eq!(moments_fast(&s, 0.5).unwrap().a2, 1.5);
    }

    #[test]
    fn constant_polynomial_has_zero_integrand() {
        let s = spec(ModelKind::Independent, 1, 1.0, 0.0);
        for x in [-3.0, 0.0, 0.7] {
            let m = moments_direct(&s, x).unwrap();
            assert_eq!((m.b2, m.c, m.delta2, m.integrand), (0.0, 0.0, 0.0, 0.0));
            assert_eq!(moments_fast(&s, x).unwrap().integrand, 0.0);
        }
    }

    #[test]
    fn variance_matches_quadratic_form_of_covariance() {
        // A^2 = w^T Sigma w with w_i = x^i, B^2 = w'^T Sigma w', C = w^T Sigma w'.
        for kind in ModelKind::ALL {
            let rho = if kind == ModelKind::Independent { 0.0 } else { 0.2 };
            let s = spec(kind, 9, 1.3, rho);
            let cov = build_covariance(&s).entries;
            for x in [-0.8_f64, -0.3, 0.0, 0.45, 0.76] {
                let w = DVector::from_fn(9, |i, _| x.powi(i as i32));
                let dw = DVector::from_fn(9, |i, _| if i == 0 { 0.0 } else { i as f64 * x.powi(i as i32 - 1) });
                let a2 = (w.transpose() * &cov * &w)[(0, 0)];
                let b2 = (dw.transpose() * &cov * &dw)[(0, 0)];
                let c = (w.transpose() * &cov * &dw)[(0, 0)];
                let m = moments_direct(&s, x).unwrap();
                assert!(rel(m.a2, a2) < 1e-13, "{kind} x={x}");
                assert!(rel(m.b2, b2) < 1e-13, "{kind} x={x}");
                assert!((m.c - c).abs() < 1e-13 * (a2 * b2).sqrt(), "{kind} x={x}");
            }
        }
    }

    #[test]
    fn overflow_guard_applies_above_256() {
        let s = spec(ModelKind::Independent, 1000, 2.0, 0.0);
        assert!(moments_fast(&s, 0.5 + 0.5 * 64.0 / 1000.0).is_ok());
        assert!(matches!(moments_direct(&s, 0.6), Err(Error::OverflowRisk { .. })));
        assert!(matches!(moments_fast(&s, -0.6), Err(Error::OverflowRisk { .. })));
        // Small models may be evaluated anywhere.
        assert!(moments_fast(&spec(ModelKind::Independent, 200, 2.0, 0.0), 1.0).is_ok());
    }

    #[test]
    fn fast_path_is_faster_for_large_n() {
        let s = spec(ModelKind::GeometricNeg, 4096, 1.0, 0.2);
        let t0 = std::time::Instant::now();
        let fast = moments_fast(&s, 0.999).unwrap();
        let t_fast = t0.elapsed();
        let t0 = std::time::Instant::now();
        let direct = moments_direct(&s, 0.999).unwrap();
        let t_direct = t0.elapsed();
        assert!(rel(fast.a2, direct.a2) < 1e-11);
        // informational: timing is noisy on shared machines
        eprintln!("n=4096: fast {t_fast:?}, direct {t_direct:?}");
        assert!(t_direct > t_fast);
    }

    fn arb_case() -> impl Strategy<Value = (ModelSpec, f64)> {
        (0usize..4, 1usize..=256, 0.25f64..4.0, 0.0f64..0.33, -1.0f64..=1.0).prop_map(|(k, n, sigma, rho, u)| {
            let kind = ModelKind::ALL[k];
            let rho = if kind == ModelKind::Independent { 0.0 } else { rho };
            (ModelSpec { kind, n, sigma, rho }, u / sigma)
        })
    }

    proptest! {
        #[test]
        fn fast_matches_direct((s, x) in arb_case()) {
            let a = moments_direct(&s, x).unwrap();
            let b = moments_fast(&s, x).unwrap();
            prop_assert!(rel(a.a2, b.a2) <= 1e-12);
            prop_assert!(rel(a.b2, b.b2) <= 1e-12 || a.b2 == b.b2);
            let c_scale = (a.a2 * a.b2).sqrt().max(f64::MIN_POSITIVE);
            prop_assert!((a.c - b.c).abs() <= 1e-12 * c_scale);
        }

        #[test]
        fn sigma_substitution_identity((s, x) in arb_case()) {
            let unit = s.unit_variance_twin();
            let lhs = integrand(&s, x).unwrap();
            let rhs = s.sigma * integrand(&unit, s.sigma * x).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()) + 1e-300);
        }
    }

    #[test]
    fn cauchy_schwarz_on_grid() {
        for kind in ModelKind::ALL {
            for &rho in &[0.0, 0.2, 0.3] {
                if kind == ModelKind::Independent && rho != 0.0 {
                    continue;
                }
                for n in [2, 16, 128] {
                    let s = spec(kind, n, 1.7, rho);
                    for k in 0..=1000 {
                        let x = (-1.0 + 2.0 * k as f64 / 1000.0) / s.sigma;
                        let m = moments_fast(&s, x).unwrap();
                        assert!(m.a2 > 0.0);
                        assert!(m.delta2 >= -1e-9 * m.a2 * m.b2, "{s} x={x}");
                        assert!(m.integrand >= 0.0 && m.integrand.is_finite());
                    }
                }
            }
        }
    }
}
