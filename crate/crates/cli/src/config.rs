use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rzlab_core::integrator::DEFAULT_TOL;
use rzlab_core::{Interval, ModelKind, ModelSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Kacrice,
    Mc,
    Both,
}

impl Method {
    pub fn kacrice(self) -> bool {
        matches!(self, Method::Kacrice | Method::Both)
    }

    pub fn mc(self) -> bool {
        matches!(self, Method::Mc | Method::Both)
    }
}

/// Fully resolved experiment settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub spec: ModelSpec,
    pub method: Method,
    pub tol: f64,
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub sweep_n: Option<Vec<usize>>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn check(&self) -> Result<(), CliError> {
        self.spec.check().map_err(|e| CliError::BadConfig(e.to_string()))?;
        if !(self.tol > 0.0) {
            return Err(CliError::BadConfig(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.method.mc() && self.samples == 0 {
            return Err(CliError::BadConfig("samples must be >= 1 for Monte Carlo".into()));
        }
        if self.workers == 0 {
            return Err(CliError::BadConfig("workers must be >= 1".into()));
        }
        if let Some(ns) = &self.sweep_n {
            if ns.is_empty() || ns.contains(&0) {
                return Err(CliError::BadConfig("sweep n values must be >= 1".into()));
            }
        }
        Ok(())
    }

    /// The n values to run: the sweep list, or the single spec n.
    pub fn n_values(&self) -> Vec<usize> {
        self.sweep_n.clone().unwrap_or_else(|| vec![self.spec.n])
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialSpec {
    kind: Option<ModelKind>,
    n: Option<usize>,
    sigma: Option<f64>,
    rho: Option<f64>,
}

/// Config file contents; every field optional, flags take precedence.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    spec: PartialSpec,
    method: Option<Method>,
    tol: Option<f64>,
    samples: Option<usize>,
    seed: Option<u64>,
    sweep_n: Option<Vec<usize>>,
    output: Option<PathBuf>,
    workers: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON config file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// independent | constant_corr | geometric_pos | geometric_neg
    #[arg(long)]
    pub kind: Option<String>,
    /// Coefficient count; a comma-separated list for sweep/compare
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Absolute quadrature tolerance per sector
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Output path prefix; writes <prefix>.json and <prefix>.csv
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, env = "RZLAB_WORKERS")]
    pub workers: Option<usize>,
    /// Fill the runtime_ms CSV column (excluded from determinism)
    #[arg(long)]
    pub timing: bool,
}

fn read_config_file(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::BadConfig(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::BadConfig(format!("{}: {e}", path.display())))
}

impl CommonArgs {
    /// Merges file and flags. `allow_list` permits several n values (sweep/compare).
    pub fn resolve(&self, default_method: Method, allow_list: bool) -> Result<ExperimentConfig, CliError> {
        let file = match &self.config {
            Some(p) => read_config_file(p)?,
            None => ConfigFile::default(),
        };

        let kind = match &self.kind {
            Some(k) => k.parse().map_err(|e: rzlab_core::Error| CliError::BadConfig(e.to_string()))?,
            None => file.spec.kind.ok_or_else(|| CliError::BadConfig("--kind is required".into()))?,
        };

        let n_list = self
            .n
            .clone()
            .or(file.sweep_n.clone())
            .or(file.spec.n.map(|n| vec![n]))
            .ok_or_else(|| CliError::BadConfig("--n is required".into()))?;
        if n_list.is_empty() {
            return Err(CliError::BadConfig("--n is empty".into()));
        }
        if !allow_list && n_list.len() > 1 {
            return Err(CliError::BadConfig("this subcommand takes a single --n".into()));
        }

        let workers = self
            .workers
            .or(file.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |p| p.get()));

        let config = ExperimentConfig {
            spec: ModelSpec {
                kind,
                n: n_list[0],
                sigma: self.sigma.or(file.spec.sigma).unwrap_or(1.0),
                rho: self.rho.or(file.spec.rho).unwrap_or(0.0),
            },
            method: self.method.or(file.method).unwrap_or(default_method),
            tol: self.tol.or(file.tol).unwrap_or(DEFAULT_TOL),
            samples: self.samples.or(file.samples).unwrap_or(10_000),
            seed: self.seed.or(file.seed).unwrap_or(0),
            sweep_n: allow_list.then_some(n_list),
            output: self.output.clone().or(file.output),
            workers,
        };
        config.check()?;
        Ok(config)
    }
}

/// Parses `lo:hi` pairs separated by commas, e.g. `-inf:-1,-1:0`.
pub fn parse_intervals(text: &str) -> Result<Vec<Interval>, CliError> {
    let parse_end = |s: &str| -> Result<f64, CliError> {
        match s.trim() {
            "inf" | "+inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            v => v.parse().map_err(|_| CliError::BadConfig(format!("bad interval endpoint {v:?}"))),
        }
    };
    text.split(',')
        .map(|pair| {
            let (lo, hi) =
                pair.split_once(':').ok_or_else(|| CliError::BadConfig(format!("interval {pair:?} is not lo:hi")))?;
            Ok(Interval::new(parse_end(lo)?, parse_end(hi)?))
        })
        .collect()
}
