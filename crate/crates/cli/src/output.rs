use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use rzlab_core::integrator::ExpectedZeroReport;
use rzlab_core::simulator::ZeroCountEstimate;
use rzlab_core::ModelSpec;

use crate::CliError;

pub const CSV_HEADER: &str =
    "experiment,kind,n,sigma,rho,method,interval_lo,interval_hi,value,stderr,err_est,seed,samples,tol,runtime_ms";

/// 17 significant digits; infinities as `inf` / `-inf`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub experiment: &'static str,
    pub spec: ModelSpec,
    pub method: &'static str,
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
    pub stderr: Option<f64>,
    pub err_est: Option<f64>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub tol: Option<f64>,
    pub runtime_ms: Option<f64>,
}

impl CsvRow {
    pub fn render(&self) -> String {
        [
            self.experiment.to_string(),
            self.spec.kind.to_string(),
            self.spec.n.to_string(),
            fmt_f64(self.spec.sigma),
            fmt_f64(self.spec.rho),
            self.method.to_string(),
            fmt_f64(self.lo),
            fmt_f64(self.hi),
            fmt_f64(self.value),
            opt(self.stderr, fmt_f64),
            opt(self.err_est, fmt_f64),
            opt(self.seed, |s| s.to_string()),
            opt(self.samples, |s| s.to_string()),
            opt(self.tol, fmt_f64),
            opt(self.runtime_ms, fmt_f64),
        ]
        .join(",")
    }
}

/// Sorts rows by `(n, method, interval_lo, interval_hi)`.
pub fn sort_rows(rows: &mut [CsvRow]) {
    rows.sort_by(|a, b| {
        a.spec
            .n
            .cmp(&b.spec.n)
            .then_with(|| a.method.cmp(b.method))
            .then_with(|| a.lo.total_cmp(&b.lo))
            .then_with(|| a.hi.total_cmp(&b.hi))
    });
}

pub fn kacrice_rows(experiment: &'static str, report: &ExpectedZeroReport, runtime_ms: Option<f64>) -> Vec<CsvRow> {
    let row = |lo: f64, hi: f64, value: f64, err: f64| CsvRow {
        experiment,
        spec: report.spec,
        method: "kacrice",
        lo,
        hi,
        value,
        stderr: None,
        err_est: Some(err),
        seed: None,
        samples: None,
        tol: Some(report.tol),
        runtime_ms,
    };
    let mut rows: Vec<CsvRow> =
        report.sectors().into_iter().map(|((lo, hi), v)| row(lo, hi, v, report.sector_err(lo, hi))).collect();
    rows.push(row(f64::NEG_INFINITY, f64::INFINITY, report.en_total, report.err_est_total));
    rows
}

pub fn mc_rows(
    experiment: &'static str,
    est: &ZeroCountEstimate,
    samples: usize,
    runtime_ms: Option<f64>,
) -> Vec<CsvRow> {
    let row = |lo: f64, hi: f64, value: f64, se: f64| CsvRow {
        experiment,
        spec: est.spec,
        method: "mc",
        lo,
        hi,
        value,
        stderr: Some(se),
        err_est: None,
        seed: Some(est.seed),
        samples: Some(samples),
        tol: None,
        runtime_ms,
    };
    let mut rows: Vec<CsvRow> =
        est.per_interval.iter().map(|p| row(p.interval.lo, p.interval.hi, p.mean, p.se)).collect();
    rows.push(row(f64::NEG_INFINITY, f64::INFINITY, est.mean_total, est.se_total));
    rows
}

pub fn render_csv(rows: &[CsvRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.render());
        out.push('\n');
    }
    out
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Appends rows, writing the header first if the file is new or empty.
pub fn append_csv(path: &Path, rows: &[CsvRow]) -> Result<(), CliError> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(|e| io_err(path, e))?;
    let mut text = String::new();
    if fresh {
        text.push_str(CSV_HEADER);
        text.push('\n');
    }
    for r in rows {
        text.push_str(&r.render());
        text.push('\n');
    }
    f.write_all(text.as_bytes()).map_err(|e| io_err(path, e))
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}
