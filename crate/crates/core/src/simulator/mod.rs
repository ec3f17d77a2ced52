//! Monte Carlo estimates of real-zero counts.
//!
//! Every sample is drawn from the unit-variance twin of the model: with
//! `a_i = sigma^i b_i` the polynomial satisfies `P(x) = Q(sigma x)`, so zeros of
//! `P` in `(a, b)` are zeros of `Q` in `(sigma a, sigma b)`. Sample `k` uses the
//! ChaCha8 stream `k` of the configured seed, which makes the estimate independent
//! of the worker count and scheduling.

pub mod roots;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use roots::{count_real_roots, real_roots};

use crate::error::{Error, Result};
use crate::model::{build_covariance, cholesky, ModelSpec};
use crate::Interval;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub spec: ModelSpec,
    pub samples: usize,
    pub seed: u64,
    #[serde(default = "Interval::unit_sectors_vec")]
    pub intervals: Vec<Interval>,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_workers() -> usize {
    1
}

impl SampleConfig {
    pub fn new(spec: ModelSpec, samples: usize, seed: u64) -> Self {
        SampleConfig { spec, samples, seed, intervals: Interval::unit_sectors_vec(), workers: 1 }
    }

    pub fn check(&self) -> Result<()> {
        self.spec.check()?;
        if self.samples == 0 {
            return Err(Error::Precondition("samples must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Precondition("workers must be at least 1".into()));
        }
        let mut sorted = self.intervals.clone();
        sorted.sort_by(|x, y| x.lo.total_cmp(&y.lo));
        for iv in &sorted {
            if !(iv.lo < iv.hi) {
                return Err(Error::Precondition(format!("empty interval ({}, {})", iv.lo, iv.hi)));
            }
        }
        if sorted.windows(2).any(|w| w[1].lo < w[0].hi) {
            return Err(Error::Precondition("intervals must be pairwise disjoint".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub interval: Interval,
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroCountEstimate {
    pub spec: ModelSpec,
    pub mean_total: f64,
    pub se_total: f64,
    pub per_interval: Vec<IntervalEstimate>,
    /// Real-root count over the whole line -> number of samples with that count.
    pub histogram: BTreeMap<usize, u64>,
    pub samples_used: usize,
    /// Samples whose coefficients were numerically all zero; excluded from the estimates.
    pub degenerate_samples: usize,
    pub seed: u64,
}

/// Deterministic generator for sample `index` of a run seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `L z` with `z` standard normal, for a lower-triangular factor `L`.
pub fn sample_coefficients<R: Rng + ?Sized>(chol: &DMatrix<f64>, rng: &mut R) -> Vec<f64> {
    let n = chol.nrows();
    let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    (0..n).map(|i| (0..=i).map(|j| chol[(i, j)] * z[j]).sum()).collect()
}

/// Sample mean and standard error of the mean.
fn mean_se(values: impl Iterator<Item = f64> + Clone, count: usize) -> (f64, f64) {
    if count == 0 {
        return (f64::NAN, f64::NAN);
    }
    let m = count as f64;
    let mean = values.clone().sum::<f64>() / m;
    if count < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (m - 1.0) / m).sqrt())
}

/// Real-root counts for one sample: total, then one per interval.
type SampleCounts = Option<(usize, Vec<usize>)>;

fn count_sample(coeffs: &[f64], scaled: &[(f64, f64)]) -> Result<SampleCounts> {
    match real_roots(coeffs) {
        Ok(roots) => {
            let per = scaled.iter().map(|&(a, b)| roots.iter().filter(|&&r| r > a && r < b).count()).collect();
            Ok(Some((roots.len(), per)))
        }
        Err(Error::DegenerateInput) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn run_simulation(config: &SampleConfig) -> Result<ZeroCountEstimate> {
    config.check()?;
    let twin = config.spec.unit_variance_twin();
    let cov = cholesky(build_covariance(&twin))?;
    let chol = cov.chol.expect("cholesky populates the factor");

    let sigma = config.spec.sigma;
    let scaled: Vec<(f64, f64)> = config.intervals.iter().map(|iv| (sigma * iv.lo, sigma * iv.hi)).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Precondition(format!("cannot start worker pool: {e}")))?;
    let counts: Vec<SampleCounts> = pool.install(|| {
        (0..config.samples as u64)
            .into_par_iter()
            .map(|k| {
                let mut rng = sample_rng(config.seed, k);
                count_sample(&sample_coefficients(&chol, &mut rng), &scaled)
            })
            .collect::<Result<_>>()
    })?;

    let used: Vec<&(usize, Vec<usize>)> = counts.iter().flatten().collect();
    let samples_used = used.len();
    let mut histogram = BTreeMap::new();
    for (total, _) in &used {
        *histogram.entry(*total).or_insert(0) += 1;
    }
    let (mean_total, se_total) = mean_se(used.iter().map(|(t, _)| *t as f64), samples_used);
    let per_interval = config
        .intervals
        .iter()
        .enumerate()
        .map(|(k, &interval)| {
            let (mean, se) = mean_se(used.iter().map(|(_, per)| per[k] as f64), samples_used);
            IntervalEstimate { interval, mean, se }
        })
        .collect();

    Ok(ZeroCountEstimate {
        spec: config.spec,
        mean_total,
        se_total,
        per_interval,
        histogram,
        samples_used,
        degenerate_samples: config.samples - samples_used,
        seed: config.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelKind;

    #[test]
    fn same_stream_same_draw() {
        let cov = cholesky(build_covariance(&ModelSpec::new(ModelKind::GeometricNeg, 6, 1.2, 0.2).unwrap())).unwrap();
        let l = cov.chol.unwrap();
        let a = sample_coefficients(&l, &mut sample_rng(42, 7));
        let b = sample_coefficients(&l, &mut sample_rng(42, 7));
        let c = sample_coefficients(&l, &mut sample_rng(42, 8));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn identity_factor_gives_standard_normals() {
        let l = DMatrix::identity(3, 3);
        let draws = 100_000;
        let mut sums = [0.0; 3];
        for k in 0..draws {
            let v = sample_coefficients(&l, &mut sample_rng(1, k));
            for i in 0..3 {
                sums[i] += v[i];
            }
        }
        let se = 1.0 / (draws as f64).sqrt();
        for s in sums {
            assert!((s / draws as f64).abs() < 3.0 * se);
        }
    }

    #[test]
    fn linear_model_always_one_root() {
        let spec = ModelSpec::new(ModelKind::GeometricNeg, 2, 2.0, 0.25).unwrap();
        let est = run_simulation(&SampleConfig::new(spec, 20_000, 3)).unwrap();
        assert_eq!(est.mean_total, 1.0);
        assert_eq!(est.se_total, 0.0);
        assert_eq!(est.histogram.get(&1), Some(&20_000));
    }

    #[test]
    fn result_does_not_depend_on_workers() {
        let spec = ModelSpec::new(ModelKind::GeometricNeg, 12, 1.5, 0.2).unwrap();
        let mut cfg = SampleConfig::new(spec, 3000, 11);
        let one = run_simulation(&cfg).unwrap();
        cfg.workers = 4;
        let four = run_simulation(&cfg).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn histogram_is_consistent_with_mean() {
        let spec = ModelSpec::new(ModelKind::Independent, 9, 1.0, 0.0).unwrap();
        let est = run_simulation(&SampleConfig::new(spec, 5000, 5)).unwrap();
        let from_hist: f64 =
            est.histogram.iter().map(|(k, v)| *k as f64 * *v as f64).sum::<f64>() / est.samples_used as f64;
        assert!((from_hist - est.mean_total).abs() < 1e-12);
        let sectors: f64 = est.per_interval.iter().map(|p| p.mean).sum();
        assert!((sectors - est.mean_total).abs() < 1e-12);
    }

    #[test]
    fn rejects_overlapping_intervals() {
        let spec = ModelSpec::new(ModelKind::Independent, 4, 1.0, 0.0).unwrap();
        let mut cfg = SampleConfig::new(spec, 10, 0);
        cfg.intervals = vec![Interval::new(0.0, 2.0), Interval::new(1.0, 3.0)];
        assert!(run_simulation(&cfg).is_err());
        cfg.intervals = vec![Interval::new(1.0, 1.0)];
        assert!(run_simulation(&cfg).is_err());
    }

    #[test]
    fn indefinite_model_is_refused() {
        let spec = ModelSpec::new(ModelKind::GeometricNeg, 3, 1.0, 0.9).unwrap();
        assert!(matches!(run_simulation(&SampleConfig::new(spec, 10, 0)), Err(Error::FactorizationFailure { .. })));
    }
}
