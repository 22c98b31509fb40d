//! Report rows, the run manifest, and the JSON / CSV / markdown writers.

use std::collections::BTreeMap;
use std::io::{self, Write};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::exact_arith::Rational;
use crate::identities::VerificationReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Markdown,
}

/// Provenance block embedded in every report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, parameters: BTreeMap<String, String>, seed: Option<u64>) -> Self {
        RunManifest {
            command: command.to_string(),
            parameters,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: String::new(),
        }
    }

    pub fn with_timestamp(mut self, at: DateTime<Utc>) -> Self {
        self.timestamp = at.to_rfc3339_opts(SecondsFormat::Secs, true);
        self
    }
}

/// 17 significant digits, enough to round-trip any double.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn opt<T: ToString>(value: &Option<T>) -> String {
    value.as_ref().map(ToString::to_string).unwrap_or_default()
}

/// Tabular view of a row, shared by the CSV and markdown writers.
pub trait ReportRow: Serialize {
    fn headers() -> &'static [&'static str];
    fn cells(&self) -> Vec<String>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub identity: String,
    pub s: String,
    pub n: u64,
    pub m: Option<u64>,
    pub lhs: String,
    pub rhs: String,
    pub equal: bool,
}

impl From<&VerificationReport> for VerifyRow {
    fn from(r: &VerificationReport) -> Self {
        VerifyRow {
            identity: r.identity.to_string(),
            s: r.params.s.to_string(),
            n: r.params.n,
            m: r.params.m,
            lhs: r.lhs.to_string(),
            rhs: r.rhs.to_string(),
            equal: r.equal,
        }
    }
}

impl ReportRow for VerifyRow {
    fn headers() -> &'static [&'static str] {
        &["identity", "s", "n", "m", "lhs", "rhs", "equal"]
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.identity.clone(),
            self.s.clone(),
            self.n.to_string(),
            opt(&self.m),
            self.lhs.clone(),
            self.rhs.clone(),
            self.equal.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureRow {
    pub s: String,
    pub n: u64,
    pub tol: String,
    pub exact: String,
    pub exact_decimal: String,
    pub cdf_value: Option<String>,
    pub cdf_estimated_error: Option<String>,
    pub cdf_abs_error: Option<String>,
    pub density_value: Option<String>,
    pub density_estimated_error: Option<String>,
    pub density_abs_error: Option<String>,
    pub status: String,
    pub pass: bool,
}

impl ReportRow for QuadratureRow {
    fn headers() -> &'static [&'static str] {
        &[
            "s",
            "n",
            "tol",
            "exact",
            "exact_decimal",
            "cdf_value",
            "cdf_estimated_error",
            "cdf_abs_error",
            "density_value",
            "density_estimated_error",
            "density_abs_error",
            "status",
            "pass",
        ]
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.s.clone(),
            self.n.to_string(),
            self.tol.clone(),
            self.exact.clone(),
            self.exact_decimal.clone(),
            opt(&self.cdf_value),
            opt(&self.cdf_estimated_error),
            opt(&self.cdf_abs_error),
            opt(&self.density_value),
            opt(&self.density_estimated_error),
            opt(&self.density_abs_error),
            self.status.clone(),
            self.pass.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulateRow {
    pub suite: String,
    pub n: u64,
    pub m: Option<u64>,
    pub s: Option<String>,
    pub samples: u64,
    pub stream_id: u64,
    pub estimate: Option<String>,
    pub std_error: Option<String>,
    pub exact: Option<String>,
    pub exact_decimal: Option<String>,
    pub z_score: Option<String>,
    pub ks_statistic: Option<String>,
    pub p_value: Option<String>,
    pub gate: String,
    pub pass: bool,
}

impl ReportRow for SimulateRow {
    fn headers() -> &'static [&'static str] {
        &[
            "suite",
            "n",
            "m",
            "s",
            "samples",
            "stream_id",
            "estimate",
            "std_error",
            "exact",
            "exact_decimal",
            "z_score",
            "ks_statistic",
            "p_value",
            "gate",
            "pass",
        ]
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.suite.clone(),
            self.n.to_string(),
            opt(&self.m),
            opt(&self.s),
            self.samples.to_string(),
            self.stream_id.to_string(),
            opt(&self.estimate),
            opt(&self.std_error),
            opt(&self.exact),
            opt(&self.exact_decimal),
            opt(&self.z_score),
            opt(&self.ks_statistic),
            opt(&self.p_value),
            self.gate.clone(),
            self.pass.to_string(),
        ]
    }
}

pub fn exact_decimal(r: &Rational) -> String {
    fmt_f64(r.to_f64())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<R> {
    pub manifest: RunManifest,
    pub rows: Vec<R>,
}

impl<R: ReportRow> Report<R> {
    pub fn write(&self, format: Format, out: &mut dyn Write) -> io::Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, self)?;
                writeln!(out)
            }
            Format::Csv => {
                writeln!(out, "# manifest: {}", serde_json::to_string(&self.manifest)?)?;
                let mut writer = csv::Writer::from_writer(out);
                writer.write_record(R::headers())?;
                for row in &self.rows {
                    writer.write_record(row.cells())?;
                }
                writer.flush()
            }
            Format::Markdown => {
                let m = &self.manifest;
                writeln!(out, "# binid {}", m.command)?;
                writeln!(out)?;
                writeln!(out, "- tool_version: {}", m.tool_version)?;
                writeln!(out, "- timestamp: {}", m.timestamp)?;
                if let Some(seed) = m.seed {
                    writeln!(out, "- seed: {seed}")?;
                }
                for (k, v) in &m.parameters {
                    writeln!(out, "- {k}: {v}")?;
                }
                writeln!(out)?;
                writeln!(out, "| {} |", R::headers().join(" | "))?;
                writeln!(out, "|{}", "---|".repeat(R::headers().len()))?;
                for row in &self.rows {
                    writeln!(out, "| {} |", row.cells().join(" | "))?;
                }
                Ok(())
            }
        }
    }
}
