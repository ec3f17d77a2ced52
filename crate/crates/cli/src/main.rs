//! `rzlab`: expected real zeros of dependent Gaussian random polynomials.
//!
//! Exit codes: 0 success, 2 model not positive definite, 3 numerical failure,
//! 4 bad configuration or I/O error.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use rzlab_core::asymptotics::{fit_slope, predict, Claim, SlopeFit};
use rzlab_core::integrator::{expected_zeros, ExpectedZeroReport};
use rzlab_core::model::{build_covariance, validate, ValidityReport};
use rzlab_core::moments::closed_form::{discrepancy_log, DiscrepancyRow};
use rzlab_core::moments::{moments_fast, MomentPoint};
use rzlab_core::simulator::{run_simulation, SampleConfig, ZeroCountEstimate};
use rzlab_core::{Error, Interval, ModelSpec};
use serde::Serialize;

use config::{parse_intervals, CommonArgs, ExperimentConfig, Method};
use output::{append_csv, fmt_f64, kacrice_rows, mc_rows, render_csv, sort_rows, with_ext, write_file, CsvRow};

#[derive(Debug)]
pub enum CliError {
    BadConfig(String),
    NotPositiveDefinite(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::NotPositiveDefinite(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::BadConfig(_) | CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::BadConfig(m) => write!(f, "bad config: {m}"),
            CliError::NotPositiveDefinite(m) => write!(f, "model is not positive definite: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidSpec(_)
            | Error::Precondition(_)
            | Error::OverflowRisk { .. }
            | Error::InsufficientPoints(_) => CliError::BadConfig(e.to_string()),
            Error::FactorizationFailure { .. }
            | Error::NearPole(_)
            | Error::PartitionDegenerate { .. }
            | Error::DegenerateInput => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "rzlab",
    version,
    about = "Expected real zeros of random algebraic polynomials with dependent coefficients"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Positive-definiteness report for the coefficient covariance
    Validate(CommonArgs),
    /// A^2, B^2, C, Delta^2 and the Kac-Rice integrand at one point
    Moments {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
    },
    /// Kac-Rice expected zero counts over the real line
    Integrate(CommonArgs),
    /// Monte Carlo real-root counts
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated lo:hi pairs; defaults to the four sectors split at 0 and +-1
        #[arg(long, allow_hyphen_values = true)]
        intervals: Option<String>,
        /// Write the total-count histogram as count,frequency CSV
        #[arg(long)]
        histogram: Option<PathBuf>,
    },
    /// One CSV block per n (and per method)
    Sweep(CommonArgs),
    /// Measured totals next to the closed-form growth predictions
    Compare(CommonArgs),
    /// Closed forms and the integrand approximation against the exact sums
    Diagnose {
        /// Output path prefix; writes <prefix>.json and <prefix>.csv
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(v).map_err(|e| CliError::Io(e.to_string()))
}

fn gate(spec: &ModelSpec) -> Result<ValidityReport, CliError> {
    let report = validate(&build_covariance(spec));
    if !report.is_positive_definite {
        return Err(CliError::NotPositiveDefinite(format!(
            "{spec}: factorization failed at pivot {:?}, min eigenvalue estimate {:e}",
            report.failed_pivot, report.min_eigenvalue_estimate
        )));
    }
    Ok(report)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))
}

fn integrate_checked(spec: &ModelSpec, tol: f64) -> Result<ExpectedZeroReport, CliError> {
    let report = expected_zeros(spec, tol)?;
    Ok(report)
}

fn check_depth(report: &ExpectedZeroReport) -> Result<(), CliError> {
    if report.max_depth_hit && report.err_est_total > 10.0 * report.tol {
        return Err(CliError::Numerical(format!(
            "{}: quadrature hit the depth limit with error estimate {:e} > 10 tol",
            report.spec, report.err_est_total
        )));
    }
    Ok(())
}

fn elapsed_ms(start: Instant, timing: bool) -> Option<f64> {
    timing.then(|| start.elapsed().as_secs_f64() * 1e3)
}

#[derive(Serialize)]
struct ValidateOutput {
    spec: ModelSpec,
    rho_in_advised_range: bool,
    #[serde(flatten)]
    report: ValidityReport,
}

fn cmd_validate(args: &CommonArgs) -> Result<(), CliError> {
    let cfg = args.resolve(Method::Kacrice, false)?;
    let report = validate(&build_covariance(&cfg.spec));
    let out = ValidateOutput { spec: cfg.spec, rho_in_advised_range: cfg.spec.rho_in_advised_range(), report };
    println!("{}", to_json(&out)?);
    if let Some(prefix) = &cfg.output {
        write_file(&with_ext(prefix, "json"), &to_json(&out)?)?;
    }
    gate(&cfg.spec).map(|_| ())
}

fn cmd_moments(args: &CommonArgs, x: f64) -> Result<(), CliError> {
    let cfg = args.resolve(Method::Kacrice, false)?;
    gate(&cfg.spec)?;
    let point: MomentPoint = moments_fast(&cfg.spec, x)?;
    println!("{}", to_json(&point)?);
    Ok(())
}

fn cmd_integrate(args: &CommonArgs) -> Result<(), CliError> {
    let cfg = args.resolve(Method::Kacrice, false)?;
    gate(&cfg.spec)?;
    let start = Instant::now();
    let report = pool(cfg.workers)?.install(|| integrate_checked(&cfg.spec, cfg.tol))?;
    let runtime = elapsed_ms(start, args.timing);
    println!("{}", to_json(&report)?);
    if let Some(prefix) = &cfg.output {
        write_file(&with_ext(prefix, "json"), &to_json(&report)?)?;
        let mut rows = kacrice_rows("integrate", &report, runtime);
        sort_rows(&mut rows);
        append_csv(&with_ext(prefix, "csv"), &rows)?;
    }
    check_depth(&report)
}

fn simulate(cfg: &ExperimentConfig, spec: ModelSpec, intervals: Vec<Interval>) -> Result<ZeroCountEstimate, CliError> {
    let config = SampleConfig { spec, samples: cfg.samples, seed: cfg.seed, intervals, workers: cfg.workers };
    Ok(run_simulation(&config)?)
}

fn cmd_simulate(args: &CommonArgs, intervals: Option<&str>, histogram: Option<&PathBuf>) -> Result<(), CliError> {
    let cfg = args.resolve(Method::Mc, false)?;
    let intervals = match intervals {
        Some(text) => parse_intervals(text)?,
        None => Interval::unit_sectors_vec(),
    };
    gate(&cfg.spec)?;
    let start = Instant::now();
    let est = simulate(&cfg, cfg.spec, intervals)?;
    let runtime = elapsed_ms(start, args.timing);
    println!("{}", to_json(&est)?);
    if let Some(prefix) = &cfg.output {
        write_file(&with_ext(prefix, "json"), &to_json(&est)?)?;
        let mut rows = mc_rows("simulate", &est, cfg.samples, runtime);
        sort_rows(&mut rows);
        append_csv(&with_ext(prefix, "csv"), &rows)?;
    }
    if let Some(path) = histogram {
        let mut text = String::from("count,frequency\n");
        for (k, v) in &est.histogram {
            text.push_str(&format!("{k},{v}\n"));
        }
        write_file(path, &text)?;
    }
    Ok(())
}

#[derive(Serialize)]
#[serde(untagged)]
enum SweepResult {
    KacRice(ExpectedZeroReport),
    MonteCarlo(ZeroCountEstimate),
}

fn cmd_sweep(args: &CommonArgs) -> Result<(), CliError> {
    let cfg = args.resolve(Method::Kacrice, true)?;
    let specs: Vec<ModelSpec> = cfg.n_values().into_iter().map(|n| ModelSpec { n, ..cfg.spec }).collect();
    for spec in &specs {
        gate(spec)?;
    }
    let mut tasks: Vec<(ModelSpec, Method)> = Vec::new();
    for spec in &specs {
        if cfg.method.kacrice() {
            tasks.push((*spec, Method::Kacrice));
        }
        if cfg.method.mc() {
            tasks.push((*spec, Method::Mc));
        }
    }

    let results: Vec<(Vec<CsvRow>, SweepResult)> = pool(cfg.workers)?.install(|| {
        tasks
            .par_iter()
            .map(|&(spec, method)| {
                let start = Instant::now();
                if method == Method::Kacrice {
                    let report = integrate_checked(&spec, cfg.tol)?;
                    check_depth(&report)?;
                    let rows = kacrice_rows("sweep", &report, elapsed_ms(start, args.timing));
                    Ok((rows, SweepResult::KacRice(report)))
                } else {
                    let est = simulate(&cfg, spec, Interval::unit_sectors_vec())?;
                    let rows = mc_rows("sweep", &est, cfg.samples, elapsed_ms(start, args.timing));
                    Ok((rows, SweepResult::MonteCarlo(est)))
                }
            })
            .collect::<Result<_, CliError>>()
    })?;

    let mut rows: Vec<CsvRow> = results.iter().flat_map(|(r, _)| r.clone()).collect();
    sort_rows(&mut rows);
    let csv = render_csv(&rows);
    match &cfg.output {
        Some(prefix) => {
            write_file(&with_ext(prefix, "csv"), &csv)?;
            let reports: Vec<&SweepResult> = results.iter().map(|(_, r)| r).collect();
            write_file(&with_ext(prefix, "json"), &to_json(&reports)?)?;
        }
        None => print!("{csv}"),
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct CompareRow {
    n: usize,
    sigma: f64,
    measured_en_total: f64,
    measured_en_total_sigma1: f64,
    sigma_identity_gap: f64,
    sigma_scaled: f64,
    unit_variance: f64,
    constant_corr_half: f64,
    sector_sigma_scaled: f64,
    sigma_scaled_at_sigma1: f64,
}

#[derive(Debug, Serialize)]
struct CompareReport {
    spec: ModelSpec,
    tol: f64,
    rows: Vec<CompareRow>,
    /// Fit of measured_en_total against ln n; absent with fewer than 3 n values.
    fit: Option<SlopeFit>,
    fit_sigma1: Option<SlopeFit>,
    slope_sigma_scaled: f64,
    slope_unit_variance: f64,
}

const COMPARE_HEADER: &str = "n,sigma,measured_en_total,measured_en_total_sigma1,sigma_identity_gap,sigma_scaled,unit_variance,constant_corr_half,sector_sigma_scaled,sigma_scaled_at_sigma1";

fn cmd_compare(args: &CommonArgs) -> Result<(), CliError> {
    let cfg = args.resolve(Method::Kacrice, true)?;
    let mut ns = cfg.n_values();
    ns.sort_unstable();
    ns.dedup();
    for &n in &ns {
        gate(&ModelSpec { n, ..cfg.spec })?;
    }
    let sigma = cfg.spec.sigma;
    let rows: Vec<CompareRow> = pool(cfg.workers)?.install(|| {
        ns.par_iter()
            .map(|&n| {
                let spec = ModelSpec { n, ..cfg.spec };
                let measured = integrate_checked(&spec, cfg.tol)?;
                let unit = integrate_checked(&spec.unit_variance_twin(), cfg.tol)?;
                check_depth(&measured)?;
                check_depth(&unit)?;
                let nf = n as f64;
                Ok(CompareRow {
                    n,
                    sigma,
                    measured_en_total: measured.en_total,
                    measured_en_total_sigma1: unit.en_total,
                    sigma_identity_gap: measured.en_total - unit.en_total,
                    sigma_scaled: predict(Claim::SigmaScaled, nf, sigma),
                    unit_variance: predict(Claim::UnitVariance, nf, sigma),
                    constant_corr_half: predict(Claim::ConstantCorrHalf, nf, sigma),
                    sector_sigma_scaled: predict(Claim::SectorSigmaScaled, nf, sigma),
                    sigma_scaled_at_sigma1: predict(Claim::SigmaScaled, nf, 1.0),
                })
            })
            .collect::<Result<_, CliError>>()
    })?;

    let fit_of = |f: fn(&CompareRow) -> f64| -> Option<SlopeFit> {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, f(r))).collect();
        fit_slope(&pts).ok()
    };
    let report = CompareReport {
        spec: cfg.spec,
        tol: cfg.tol,
        fit: fit_of(|r| r.measured_en_total),
        fit_sigma1: fit_of(|r| r.measured_en_total_sigma1),
        slope_sigma_scaled: 2.0 / (std::f64::consts::PI * sigma),
        slope_unit_variance: 2.0 / std::f64::consts::PI,
        rows,
    };
    println!("{}", to_json(&report)?);
    if let Some(prefix) = &cfg.output {
        write_file(&with_ext(prefix, "json"), &to_json(&report)?)?;
        let mut csv = String::from(COMPARE_HEADER);
        csv.push('\n');
        for r in &report.rows {
            let fields = [
                r.n.to_string(),
                fmt_f64(r.sigma),
                fmt_f64(r.measured_en_total),
                fmt_f64(r.measured_en_total_sigma1),
                fmt_f64(r.sigma_identity_gap),
                fmt_f64(r.sigma_scaled),
                fmt_f64(r.unit_variance),
                fmt_f64(r.constant_corr_half),
                fmt_f64(r.sector_sigma_scaled),
                fmt_f64(r.sigma_scaled_at_sigma1),
            ];
            csv.push_str(&fields.join(","));
            csv.push('\n');
        }
        write_file(&with_ext(prefix, "csv"), &csv)?;
    }
    Ok(())
}

const DIAGNOSE_HEADER: &str = "n,sigma,rho,x,u,A2,closedform_A2,A2_rel_dev,C,closedform_C,C_rel_dev,integrand,integrand_approx,integrand_rel_dev,notes";

fn cmd_diagnose(output: Option<&PathBuf>) -> Result<(), CliError> {
    let log: Vec<DiscrepancyRow> = discrepancy_log()?;
    println!("{}", to_json(&log)?);
    if let Some(prefix) = output {
        write_file(&with_ext(prefix, "json"), &to_json(&log)?)?;
        let o = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        let mut csv = String::from(DIAGNOSE_HEADER);
        csv.push('\n');
        for r in &log {
            let fields = [
                r.n.to_string(),
                fmt_f64(r.sigma),
                fmt_f64(r.rho),
                fmt_f64(r.x),
                fmt_f64(r.exact.u),
                fmt_f64(r.exact.a2),
                o(r.closedform_a2),
                o(r.a2_rel_dev),
                fmt_f64(r.exact.c),
                o(r.closedform_c),
                o(r.c_rel_dev),
                fmt_f64(r.exact.integrand),
                o(r.integrand_approx),
                o(r.integrand_rel_dev),
                format!("\"{}\"", r.notes.join("; ").replace('"', "'")),
            ];
            csv.push_str(&fields.join(","));
            csv.push('\n');
        }
        write_file(&with_ext(prefix, "csv"), &csv)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Validate(a) => cmd_validate(a),
        Command::Moments { common, x } => cmd_moments(common, *x),
        Command::Integrate(a) => cmd_integrate(a),
        Command::Simulate { common, intervals, histogram } => {
            cmd_simulate(common, intervals.as_deref(), histogram.as_ref())
        }
        Command::Sweep(a) => cmd_sweep(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Diagnose { output } => cmd_diagnose(output.as_ref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rzlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
