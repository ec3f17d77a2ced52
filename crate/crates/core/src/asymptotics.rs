//! Closed-form growth predictions and least-squares fits against `ln n`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Asymptotic claims for `EN(-inf, inf)` (or one sector, for `SectorSigmaScaled`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    /// `(2 / (pi sigma)) ln n`
    SigmaScaled,
    /// `(2 / pi) ln n`, the classical unit-variance rate
    UnitVariance,
    /// `(1 / pi) ln n`, half the classical rate
    ConstantCorrHalf,
    /// `(1 / (2 pi sigma)) ln n`, one of the four sectors
    SectorSigmaScaled,
}

impl Claim {
    pub const ALL: [Claim; 4] =
        [Claim::SigmaScaled, Claim::UnitVariance, Claim::ConstantCorrHalf, Claim::SectorSigmaScaled];

    pub fn as_str(self) -> &'static str {
        match self {
            Claim::SigmaScaled => "sigma_scaled",
            Claim::UnitVariance => "unit_variance",
            Claim::ConstantCorrHalf => "constant_corr_half",
            Claim::SectorSigmaScaled => "sector_sigma_scaled",
        }
    }
}

pub fn predict(claim: Claim, n: f64, sigma: f64) -> f64 {
    let ln_n = n.ln();
    match claim {
        Claim::SigmaScaled => 2.0 / (PI * sigma) * ln_n,
        Claim::UnitVariance => 2.0 / PI * ln_n,
        Claim::ConstantCorrHalf => ln_n / PI,
        Claim::SectorSigmaScaled => ln_n / (2.0 * PI * sigma),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub residual_rms: f64,
}

/// Ordinary least squares of `value` against `ln n`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    let mut ns: Vec<f64> = points.iter().map(|p| p.0).collect();
    ns.sort_by(f64::total_cmp);
    ns.dedup();
    if points.len() < 3 || ns.len() != points.len() {
        return Err(Error::InsufficientPoints(ns.len()));
    }
    if points.iter().any(|&(n, v)| !(n > 0.0) || !v.is_finite()) {
        return Err(Error::Precondition("fit points need n > 0 and finite values".into()));
    }
    // Sort so the floating-point sums do not depend on input order.
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    let m = sorted.len() as f64;
    let xs: Vec<f64> = sorted.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = sorted.iter().map(|p| p.1).collect();
    let x_mean = xs.iter().sum::<f64>() / m;
    let y_mean = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(SlopeFit {
        points: sorted,
        slope,
        intercept,
        slope_stderr: (ssr / (m - 2.0) / sxx).sqrt(),
        residual_rms: (ssr / m).sqrt(),
    })
}
