//! Coefficient-dependence models and their covariance matrices.
//!
//! A model describes the Gaussian coefficient vector `(a_0, ..., a_{n-1})` with
//! `Var(a_i) = sigma^(2i)` and a correlation structure `r_ij` that depends only on
//! `|i - j|` (or is constant). Covariance entries are `r_ij * sigma^i * sigma^j`.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest dimension for which `validate` runs a dense symmetric eigensolver.
/// Above it the minimum eigenvalue is a Gershgorin bound.
const EIGEN_DIM_LIMIT: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Independent,
    ConstantCorr,
    GeometricPos,
    GeometricNeg,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] =
        [ModelKind::Independent, ModelKind::ConstantCorr, ModelKind::GeometricPos, ModelKind::GeometricNeg];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Independent => "independent",
            ModelKind::ConstantCorr => "constant_corr",
            ModelKind::GeometricPos => "geometric_pos",
            ModelKind::GeometricNeg => "geometric_neg",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown model kind {s:?}")))
    }
}

/// The coefficient ensemble: kind, coefficient count `n`, growth base `sigma`
/// and correlation parameter `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub n: usize,
    pub sigma: f64,
    pub rho: f64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, n: usize, sigma: f64, rho: f64) -> Result<Self> {
        let spec = ModelSpec { kind, n, sigma, rho };
        spec.check()?;
        Ok(spec)
    }

    /// Field invariants: `n >= 1`, `sigma > 0`, `rho >= 0`, all finite.
    pub fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidSpec("n must be at least 1".into()));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidSpec(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if !(self.rho.is_finite() && self.rho >= 0.0) {
            return Err(Error::InvalidSpec(format!("rho must be >= 0, got {}", self.rho)));
        }
        Ok(())
    }

    /// Whether `rho` lies in the range where the kind is known to be well posed.
    /// Outside it the model is still usable if the factorization succeeds.
    pub fn rho_in_advised_range(&self) -> bool {
        let r = self.rho;
        match self.kind {
            ModelKind::Independent => r == 0.0,
            ModelKind::ConstantCorr => r > 0.0 && r < 1.0,
            ModelKind::GeometricPos => r > 0.0 && r < 0.5,
            ModelKind::GeometricNeg => (0.0..1.0 / 3.0).contains(&r),
        }
    }

    /// Correlation of `a_i` and `a_j`.
    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 1.0;
        }
        let lag = i.abs_diff(j) as i32;
        match self.kind {
            ModelKind::Independent => 0.0,
            ModelKind::ConstantCorr => self.rho,
            ModelKind::GeometricPos => self.rho.powi(lag),
            ModelKind::GeometricNeg => -self.rho.powi(lag),
        }
    }

    /// Same kind, `n` and `rho` with unit variances.
    pub fn unit_variance_twin(&self) -> ModelSpec {
        ModelSpec { sigma: 1.0, ..*self }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(n={}, sigma={}, rho={})", self.kind, self.n, self.sigma, self.rho)
    }
}

/// Dense coefficient covariance together with its correlation matrix and the
/// per-index standard deviations `sigma^i`.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    pub dim: usize,
    pub entries: DMatrix<f64>,
    pub correlation: DMatrix<f64>,
    pub std_devs: Vec<f64>,
    /// Lower-triangular factor of `entries`, present after [`cholesky`].
    pub chol: Option<DMatrix<f64>>,
    pub min_eigenvalue_estimate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub is_positive_definite: bool,
    pub min_eigenvalue_estimate: f64,
    /// Index of the first pivot that fell below tolerance, if any.
    pub failed_pivot: Option<usize>,
}

pub fn build_covariance(spec: &ModelSpec) -> CovarianceMatrix {
    let n = spec.n;
    let std_devs: Vec<f64> = (0..n).map(|i| spec.sigma.powi(i as i32)).collect();
    let correlation = DMatrix::from_fn(n, n, |i, j| spec.correlation(i, j));
    let entries = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            spec.sigma.powi(2 * i as i32)
        } else {
            correlation[(i, j)] * (std_devs[i.min(j)] * std_devs[i.max(j)])
        }
    });
    CovarianceMatrix { dim: n, entries, correlation, std_devs, chol: None, min_eigenvalue_estimate: None }
}

/// Cholesky factor of a symmetric matrix with a scale-aware pivot gate:
/// every pivot must exceed `dim * eps * max_diag`.
fn factor_lower(m: &DMatrix<f64>) -> std::result::Result<DMatrix<f64>, Error> {
    let dim = m.nrows();
    let max_diag = (0..dim).map(|i| m[(i, i)]).fold(0.0_f64, f64::max);
    let tol = dim as f64 * f64::EPSILON * max_diag;

    // Row-major lower triangle so the inner products run over contiguous slices.
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut row = vec![0.0; i + 1];
        for j in 0..i {
            let dot: f64 = row[..j].iter().zip(&rows[j][..j]).map(|(a, b)| a * b).sum();
            row[j] = (m[(i, j)] - dot) / rows[j][j];
        }
        let pivot = m[(i, i)] - row[..i].iter().map(|v| v * v).sum::<f64>();
        if !(pivot > tol) {
            return Err(Error::FactorizationFailure { index: i, pivot, tol });
        }
        row[i] = pivot.sqrt();
        rows.push(row);
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| if j <= i { rows[i][j] } else { 0.0 }))
}

fn gershgorin_lower_bound(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| {
            let off: f64 = (0..m.ncols()).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
            m[(i, i)] - off
        })
        .fold(f64::INFINITY, f64::min)
}

fn min_eigenvalue_estimate(cov: &CovarianceMatrix) -> f64 {
    if cov.dim == 0 {
        return f64::NAN;
    }
    let finite = cov.entries.iter().all(|v| v.is_finite());
    if cov.dim <= EIGEN_DIM_LIMIT && finite {
        let eig = SymmetricEigen::new(cov.entries.clone());
        return eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    }
    // lambda_min(D R D) >= lambda_min(R) * min_i d_i^2 when lambda_min(R) >= 0.
    let r_bound = gershgorin_lower_bound(&cov.correlation);
    let d2_min = cov.std_devs.iter().map(|d| d * d).fold(f64::INFINITY, f64::min);
    let d2_max = cov.std_devs.iter().map(|d| d * d).fold(0.0_f64, f64::max);
    if r_bound >= 0.0 {
        r_bound * d2_min
    } else {
        r_bound * d2_max
    }
}

/// Positive-definiteness verdict.
///
/// The factorization runs on the correlation matrix: `D R D` is positive definite
/// iff `R` is, and `R` has unit diagonal so the pivot gate is not swamped by the
/// `sigma^(2i)` grading of the covariance.
pub fn validate(cov: &CovarianceMatrix) -> ValidityReport {
    let (is_positive_definite, failed_pivot) = match factor_lower(&cov.correlation) {
        Ok(_) => (true, None),
        Err(Error::FactorizationFailure { index, .. }) => (false, Some(index)),
        Err(_) => (false, None),
    };
    ValidityReport {
        is_positive_definite,
        min_eigenvalue_estimate: cov.min_eigenvalue_estimate.unwrap_or_else(|| min_eigenvalue_estimate(cov)),
        failed_pivot,
    }
}

/// Populates `chol` with the lower-triangular factor of the covariance.
pub fn cholesky(mut cov: CovarianceMatrix) -> Result<CovarianceMatrix> {
    let mut l = factor_lower(&cov.correlation)?;
    for i in 0..cov.dim {
        let d = cov.std_devs[i];
        for j in 0..=i {
            l[(i, j)] *= d;
        }
    }
    cov.chol = Some(l);
    Ok(cov)
}

impl CovarianceMatrix {
    /// Max-norm relative error of `chol * chol^T` against `entries`, measured on
    /// the correlation scale so that every entry carries equal weight.
    pub fn reconstruction_error(&self) -> Option<f64> {
        let l = self.chol.as_ref()?;
        let llt = l * l.transpose();
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let scale = self.std_devs[i] * self.std_devs[j];
                worst = worst.max(((llt[(i, j)] - self.entries[(i, j)]) / scale).abs());
            }
        }
        Some(worst)
    }

    /// The matrix with rows and columns in reversed index order.
    pub fn index_reversed(&self) -> DMatrix<f64> {
        let n = self.dim;
        DMatrix::from_fn(n, n, |i, j| self.entries[(n - 1 - i, n - 1 - j)])
    }
}

/// The model of the index-reversed coefficient vector `b_k = a_{n-1-k}`.
///
/// Every supported correlation depends on `|i - j|` only (or is constant), so the
/// reversed covariance equals `scale * cov(spec')` with `sigma' = 1/sigma` and
/// `scale = sigma^(2(n-1))`.
pub fn reverse_model(spec: &ModelSpec) -> (ModelSpec, f64) {
    let reversed = ModelSpec { sigma: 1.0 / spec.sigma, ..*spec };
    let scale = spec.sigma.powi(2 * (spec.n as i32 - 1));
    (reversed, scale)
}
