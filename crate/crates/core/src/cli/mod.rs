//! `binid` command-line front end.
//!
//! Exit codes: 0 when every row passes, 1 for usage or precondition errors,
//! 2 when any verification row fails.

pub mod report;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::PathBuf;

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::exact_arith::Rational;
use crate::identities::{self, IdentityError, IdentityId, IdentityParams, SweepGrid};
use crate::laplace_numeric::{
    laplace_via_cdf_quadrature, laplace_via_density_quadrature, QuadratureError, QuadratureResult, MIN_TOLERANCE,
};
use crate::montecarlo::{
    draw_samples, empirical_laplace, estimate_tail_prob, ks_two_sample, sample_max_exp, sample_sum_exp,
    MonteCarloError, MonteCarloEstimate, RngConfig,
};
use report::{exact_decimal, fmt_f64, Format, QuadratureRow, Report, ReportRow, RunManifest, SimulateRow, VerifyRow};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

/// Environment variable overriding the default simulation seed.
pub const SEED_ENV: &str = "BINID_SEED";
pub const DEFAULT_SEED: u64 = 20_240_601;

/// Significance level of the two-sample KS gate.
pub const KS_ALPHA: f64 = 0.01;
/// Standard errors allowed between an estimate and its exact reference.
pub const SIGMA_GATE: f64 = 4.0;

#[derive(Debug, Parser)]
#[command(
    name = "binid",
    version,
    about = "Exact and statistical verification of exponential-order-statistic binomial identities"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check identities exactly over a parameter grid
    Verify(VerifyArgs),
    /// Cross-check the two integral forms against the exact transform
    Quadrature(QuadratureArgs),
    /// Run seeded Monte Carlo gates
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write the report here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Identity name, or "all"
    #[arg(long, default_value = "all")]
    pub identity: String,
    /// Comma-separated exact rationals ("p/q" or integers)
    #[arg(long)]
    pub s: Option<String>,
    /// Single value, comma list, or inclusive range "a..b"
    #[arg(long)]
    pub n: Option<String>,
    /// Exponent values for the identities that take one
    #[arg(long)]
    pub m: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct QuadratureArgs {
    /// Comma-separated positive reals
    #[arg(long, default_value = "0.5,1,2,10")]
    pub s: String,
    #[arg(long, default_value = "0..30")]
    pub n: String,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Lemma1,
    Tail,
    Laplace,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Lemma1 => "lemma1",
            Suite::Tail => "tail",
            Suite::Laplace => "laplace",
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// lemma1: max vs sum of exponentials (KS); tail: P(T > max); laplace: E[exp(-s max)]
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, default_value = "1,2,5,10")]
    pub n: String,
    #[arg(long, default_value_t = 1)]
    pub m: u64,
    /// Exact positive rational rate
    #[arg(long, default_value = "1")]
    pub s: String,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, env = SEED_ENV)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(io::Error),
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

fn usage(msg: impl ToString) -> CliError {
    CliError::Usage(msg.to_string())
}

/// Parses `"7"`, `"1,2,5"` or the inclusive range `"0..100"` (also `"0..=100"`).
pub fn parse_u64_set(text: &str) -> Result<Vec<u64>, String> {
    let text = text.trim();
    let parse = |t: &str| {
        t.trim()
            .parse::<u64>()
            .map_err(|_| format!("invalid non-negative integer {t:?}"))
    };
    if let Some((lo, hi)) = text.split_once("..") {
        let hi = hi.strip_prefix('=').unwrap_or(hi);
        let (lo, hi) = (parse(lo)?, parse(hi)?);
        if lo > hi {
            return Err(format!("empty range {text:?}"));
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',').map(parse).collect()
}

pub fn parse_rational_list(text: &str) -> Result<Vec<Rational>, String> {
    text.split(',')
        .map(|t| {
            let q: Rational = t.parse().map_err(|e| format!("{e}"))?;
            if q.is_positive() {
                Ok(q)
            } else {
                Err(format!("s must be positive, got {q}"))
            }
        })
        .collect()
}

fn parse_positive_reals(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            let value = match t.parse::<Rational>() {
                Ok(q) => q.to_f64(),
                Err(_) => t.parse::<f64>().map_err(|_| format!("invalid real {t:?}"))?,
            };
            if value.is_finite() && value > 0.0 {
                Ok(value)
            } else {
                Err(format!("s must be positive and finite, got {t}"))
            }
        })
        .collect()
}

fn as_range(values: &[u64]) -> Option<RangeInclusive<u64>> {
    let (&lo, &hi) = (values.first()?, values.last()?);
    let contiguous = values.windows(2).all(|w| w[1] == w[0] + 1);
    contiguous.then_some(lo..=hi)
}

/// Manifest timestamp. `SOURCE_DATE_EPOCH` wins when set; seeded commands
/// otherwise use the epoch so that their reports are reproducible byte for byte.
fn report_time(deterministic: bool) -> DateTime<Utc> {
    let pinned = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse::<i64>().ok())
        .and_then(|secs| DateTime::from_timestamp(secs, 0));
    match pinned {
        Some(t) => t,
        None if deterministic => DateTime::UNIX_EPOCH,
        None => Utc::now(),
    }
}

fn emit<R: ReportRow>(report: &Report<R>, output: &OutputArgs) -> Result<(), CliError> {
    match &output.out {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            report.write(output.format, &mut file)?;
            file.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            report.write(output.format, &mut lock)?;
        }
    }
    Ok(())
}

fn identity_is_precondition(e: &IdentityError) -> bool {
    !matches!(e, IdentityError::InternalRouteMismatch(_))
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<i32, CliError> {
    let ids: Vec<IdentityId> = if args.identity == "all" {
        IdentityId::ALL.to_vec()
    } else {
        vec![args.identity.parse().map_err(usage)?]
    };
    let defaults = SweepGrid::default();
    let s_values = match &args.s {
        Some(text) => parse_rational_list(text).map_err(usage)?,
        None => defaults.s_values.clone(),
    };
    let explicit_n = match &args.n {
        Some(text) => Some(parse_u64_set(text).map_err(usage)?),
        None => None,
    };
    let m_values = match &args.m {
        Some(text) => parse_u64_set(text).map_err(usage)?,
        None => defaults.m_range.clone().collect(),
    };

    let single = ids.len() == 1;
    let mut jobs = Vec::new();
    for &id in &ids {
        let n_values: Vec<u64> = match &explicit_n {
            // an explicitly named identity gets exactly the requested points
            Some(values) if single => values.clone(),
            Some(values) => values.iter().copied().filter(|&n| n >= id.min_n()).collect(),
            None => defaults.n_range.clone().filter(|&n| n >= id.min_n()).collect(),
        };
        for &n in &n_values {
            for s in &s_values {
                if id.uses_m() {
                    for &m in &m_values {
                        jobs.push((id, IdentityParams::with_m(s.clone(), n, m)));
                    }
                } else {
                    jobs.push((id, IdentityParams::new(s.clone(), n)));
                }
            }
        }
    }

    let results: Vec<_> = jobs.into_par_iter().map(|(id, p)| identities::verify(id, &p)).collect();
    let mut reports = Vec::with_capacity(results.len());
    let mut failed = false;
    for result in results {
        match result {
            Ok(r) => reports.push(r),
            Err(e) if identity_is_precondition(&e) => return Err(usage(e)),
            Err(e) => {
                eprintln!("binid: {e}");
                failed = true;
            }
        }
    }
    reports.sort_by(|a, b| {
        (a.identity, a.params.n, a.params.m, &a.params.s).cmp(&(b.identity, b.params.n, b.params.m, &b.params.s))
    });
    failed |= reports.iter().any(|r| !r.equal);

    let mut params = BTreeMap::new();
    params.insert("identity".into(), args.identity.clone());
    params.insert(
        "s".into(),
        s_values.iter().map(ToString::to_string).collect::<Vec<_>>().join(","),
    );
    params.insert(
        "n".into(),
        args.n
            .clone()
            .unwrap_or_else(|| format!("{}..{}", defaults.n_range.start(), defaults.n_range.end())),
    );
    let m_text = match as_range(&m_values) {
        Some(r) => format!("{}..{}", r.start(), r.end()),
        None => m_values.iter().map(ToString::to_string).collect::<Vec<_>>().join(","),
    };
    params.insert("m".into(), m_text);
    params.insert("format".into(), format!("{:?}", args.output.format).to_lowercase());

    let report = Report {
        manifest: RunManifest::new("verify", params, None).with_timestamp(report_time(false)),
        rows: reports.iter().map(VerifyRow::from).collect(),
    };
    emit(&report, &args.output)?;
    Ok(if failed { EXIT_FAILURE } else { EXIT_PASS })
}

fn quadrature_row(s: f64, n: u64, tol: f64) -> Result<QuadratureRow, CliError> {
    let exact_s = Rational::from_f64(s).ok_or_else(|| usage("s must be finite"))?;
    let exact = identities::eval_basic_rhs(&exact_s, n).map_err(usage)?;
    let reference = exact.to_f64();
    let limit = 10.0 * tol;

    let mut status = "ok".to_string();
    let mut pass = true;
    let mut record = |result: Result<QuadratureResult, QuadratureError>| -> Result<_, CliError> {
        match result {
            Ok(r) => {
                let abs_error = (r.value - reference).abs();
                pass &= abs_error <= limit;
                Ok((
                    Some(fmt_f64(r.value)),
                    Some(fmt_f64(r.estimated_error)),
                    Some(fmt_f64(abs_error)),
                ))
            }
            Err(QuadratureError::ToleranceNotMet { .. }) => {
                status = "tolerance_not_met".to_string();
                pass = false;
                Ok((None, None, None))
            }
            Err(e) => Err(usage(e)),
        }
    };
    let (cdf_value, cdf_estimated_error, cdf_abs_error) = record(laplace_via_cdf_quadrature(s, n, tol))?;
    let (density_value, density_estimated_error, density_abs_error) = if n >= 1 {
        record(laplace_via_density_quadrature(s, n, tol))?
    } else {
        (None, None, None)
    };
    Ok(QuadratureRow {
        s: fmt_f64(s),
        n,
        tol: fmt_f64(tol),
        exact: exact.to_string(),
        exact_decimal: exact_decimal(&exact),
        cdf_value,
        cdf_estimated_error,
        cdf_abs_error,
        density_value,
        density_estimated_error,
        density_abs_error,
        status,
        pass,
    })
}

pub fn cmd_quadrature(args: &QuadratureArgs) -> Result<i32, CliError> {
    if !(args.tol.is_finite() && args.tol >= MIN_TOLERANCE) {
        return Err(usage(QuadratureError::InvalidTolerance(args.tol)));
    }
    let s_values = parse_positive_reals(&args.s).map_err(usage)?;
    let n_values = parse_u64_set(&args.n).map_err(usage)?;
    let jobs: Vec<(f64, u64)> = n_values
        .iter()
        .flat_map(|&n| s_values.iter().map(move |&s| (s, n)))
        .collect();
    let mut rows = jobs
        .into_par_iter()
        .map(|(s, n)| quadrature_row(s, n, args.tol))
        .collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|a, b| {
        let key = |r: &QuadratureRow| (r.n, r.s.parse::<f64>().unwrap_or(f64::NAN));
        key(a).partial_cmp(&key(b)).unwrap_or(std::cmp::Ordering::Equal)
    });
    let failed = rows.iter().any(|r| !r.pass);

    let mut params = BTreeMap::new();
    params.insert("s".into(), args.s.clone());
    params.insert("n".into(), args.n.clone());
    params.insert("tol".into(), fmt_f64(args.tol));
    params.insert("format".into(), format!("{:?}", args.output.format).to_lowercase());
    let report = Report {
        manifest: RunManifest::new("quadrature", params, None).with_timestamp(report_time(false)),
        rows,
    };
    emit(&report, &args.output)?;
    Ok(if failed { EXIT_FAILURE } else { EXIT_PASS })
}

/// Stream ids depend only on the suite and `n`, never on list position.
fn stream_id(suite: Suite, n: u64, side: u64) -> u64 {
    let suite_code = match suite {
        Suite::Lemma1 => 1u64,
        Suite::Tail => 2,
        Suite::Laplace => 3,
    };
    (suite_code << 48) | (n << 1) | side
}

fn estimate_row(
    suite: Suite,
    n: u64,
    m: Option<u64>,
    s: &Rational,
    stream: u64,
    est: &MonteCarloEstimate,
) -> SimulateRow {
    let z = est.z_score();
    SimulateRow {
        suite: suite.name().into(),
        n,
        m,
        s: Some(s.to_string()),
        samples: est.samples,
        stream_id: stream,
        estimate: Some(fmt_f64(est.estimate)),
        std_error: Some(fmt_f64(est.std_error)),
        exact: est.exact_reference.as_ref().map(ToString::to_string),
        exact_decimal: est.exact_reference.as_ref().map(exact_decimal),
        z_score: z.map(fmt_f64),
        ks_statistic: None,
        p_value: None,
        gate: format!("z<={SIGMA_GATE}"),
        pass: z.is_some_and(|z| z <= SIGMA_GATE),
    }
}

fn simulate_row(args: &SimulateArgs, s: &Rational, seed: u64, n: u64) -> Result<SimulateRow, MonteCarloError> {
    let samples = args.samples;
    match args.suite {
        Suite::Lemma1 => {
            let count = usize::try_from(samples).unwrap_or(usize::MAX);
            let xs_stream = stream_id(Suite::Lemma1, n, 0);
            let xs = draw_samples(count, RngConfig::new(seed, xs_stream), |r| sample_max_exp(n, r))?;
            let ys = draw_samples(count, RngConfig::new(seed, stream_id(Suite::Lemma1, n, 1)), |r| {
                sample_sum_exp(n, r)
            })?;
            let ks = ks_two_sample(&xs, &ys)?;
            Ok(SimulateRow {
                suite: Suite::Lemma1.name().into(),
                n,
                m: None,
                s: None,
                samples,
                stream_id: xs_stream,
                estimate: None,
                std_error: None,
                exact: None,
                exact_decimal: None,
                z_score: None,
                ks_statistic: Some(fmt_f64(ks.statistic)),
                p_value: Some(fmt_f64(ks.p_value)),
                gate: format!("p>{KS_ALPHA}"),
                pass: ks.p_value > KS_ALPHA,
            })
        }
        Suite::Tail => {
            let stream = stream_id(Suite::Tail, n, 0);
            let est = estimate_tail_prob(args.m, s, n, samples, RngConfig::new(seed, stream))?;
            Ok(estimate_row(Suite::Tail, n, Some(args.m), s, stream, &est))
        }
        Suite::Laplace => {
            let stream = stream_id(Suite::Laplace, n, 0);
            let est = empirical_laplace(s, n, samples, RngConfig::new(seed, stream))?;
            Ok(estimate_row(Suite::Laplace, n, None, s, stream, &est))
        }
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<i32, CliError> {
    let n_values = parse_u64_set(&args.n).map_err(usage)?;
    let s = args.s.parse::<Rational>().map_err(usage)?;
    if !s.is_positive() {
        return Err(usage(format!("s must be positive, got {s}")));
    }
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    let rows = n_values
        .par_iter()
        .map(|&n| simulate_row(args, &s, seed, n))
        .collect::<Result<Vec<_>, _>>()
        .map_err(usage)?;
    let failed = rows.iter().any(|r| !r.pass);

    let mut params = BTreeMap::new();
    params.insert("suite".into(), args.suite.name().into());
    params.insert("n".into(), args.n.clone());
    params.insert("samples".into(), args.samples.to_string());
    params.insert("format".into(), format!("{:?}", args.output.format).to_lowercase());
    if args.suite != Suite::Lemma1 {
        params.insert("s".into(), s.to_string());
    }
    if args.suite == Suite::Tail {
        params.insert("m".into(), args.m.to_string());
    }
    let report = Report {
        manifest: RunManifest::new("simulate", params, Some(seed)).with_timestamp(report_time(true)),
        rows,
    };
    emit(&report, &args.output)?;
    Ok(if failed { EXIT_FAILURE } else { EXIT_PASS })
}

/// Parses `argv` and runs the selected command, returning the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Verify(args) => cmd_verify(args),
        Command::Quadrature(args) => cmd_quadrature(args),
        Command::Simulate(args) => cmd_simulate(args),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("binid: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Io(e)) => {
            eprintln!("binid: {e}");
            EXIT_USAGE
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}
