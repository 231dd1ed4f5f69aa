//! Benchmark drivers and their reports.

pub mod bitmap;
pub mod copy;
pub mod dbi;
pub mod htap;
pub mod ops;
pub mod sets;

use std::fmt::Write as _;
use std::io::Write;

use sha2::{Digest, Sha256};

use crate::config::{Geometry, TimingEnergyModel};
use crate::error::{Error, Result};

/// How a checked metric is judged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Exact(f64),
    /// Relative tolerance around a reference value.
    Within { value: f64, rel: f64 },
    Range { lo: f64, hi: f64 },
    AtLeast(f64),
    /// A boolean property; the value is 1 when it holds.
    Holds,
}

impl Target {
    pub fn accepts(&self, v: f64) -> bool {
        match *self {
            Target::Exact(t) => v == t,
            Target::Within { value, rel } => (v - value).abs() <= rel * value.abs(),
            Target::Range { lo, hi } => (lo..=hi).contains(&v),
            Target::AtLeast(t) => v >= t,
            Target::Holds => v == 1.0,
        }
    }

    fn target_text(&self) -> String {
        match *self {
            Target::Exact(t) | Target::Within { value: t, .. } => t.to_string(),
            Target::Range { lo, hi } => format!("[{lo}, {hi}]"),
            Target::AtLeast(t) => format!(">= {t}"),
            Target::Holds => "true".into(),
        }
    }

    fn tolerance_text(&self) -> String {
        match *self {
            Target::Exact(_) | Target::Holds => "exact".into(),
            Target::Within { rel, .. } => format!("+-{}%", rel * 100.0),
            Target::Range { .. } | Target::AtLeast(_) => "range".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub metric: String,
    pub value: f64,
    pub unit: &'static str,
    pub target: Option<Target>,
    /// Acceptance criterion or example the check belongs to.
    pub criterion: Option<&'static str>,
}

impl ReportRow {
    pub fn passed(&self) -> Option<bool> {
        self.target.map(|t| t.accepts(self.value))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub name: String,
    /// Short hash of the configuration, parameters and seed.
    pub digest: String,
    pub rows: Vec<ReportRow>,
}

impl BenchReport {
    pub fn new(name: &str, config_text: &str, params: &str) -> Self {
        let mut h = Sha256::new();
        for part in [name, config_text, params] {
            h.update(part.as_bytes());
            h.update([0]);
        }
        let digest = h.finalize().iter().take(8).fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
        BenchReport {
            name: name.to_string(),
            digest,
            rows: Vec::new(),
        }
    }

    pub fn metric(&mut self, metric: impl Into<String>, value: f64, unit: &'static str) {
        self.rows.push(ReportRow {
            metric: metric.into(),
            value,
            unit,
            target: None,
            criterion: None,
        });
    }

    pub fn check(
        &mut self,
        metric: impl Into<String>,
        value: f64,
        unit: &'static str,
        target: Target,
        criterion: &'static str,
    ) {
        self.rows.push(ReportRow {
            metric: metric.into(),
            value,
            unit,
            target: Some(target),
            criterion: Some(criterion),
        });
    }

    pub fn holds(&mut self, metric: impl Into<String>, ok: bool, criterion: &'static str) {
        self.check(metric, ok as u8 as f64, "bool", Target::Holds, criterion);
    }

    pub fn get(&self, metric: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.metric == metric).map(|r| r.value)
    }

    /// True when every checked row passes.
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed() != Some(false))
    }

    pub fn failures(&self) -> Vec<&ReportRow> {
        self.rows.iter().filter(|r| r.passed() == Some(false)).collect()
    }

    /// CSV with columns bench, digest, metric, value, unit, target,
    /// tolerance, criterion, status.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(e.to_string());
        out.write_record([
            "bench", "digest", "metric", "value", "unit", "target", "tolerance", "criterion", "status",
        ])
        .map_err(io)?;
        for r in &self.rows {
            let (target, tol) = r
                .target
                .map_or((String::new(), String::new()), |t| (t.target_text(), t.tolerance_text()));
            let status = match r.passed() {
                Some(true) => "pass",
                Some(false) => "FAIL",
                None => "",
            };
            out.write_record([
                self.name.as_str(),
                &self.digest,
                &r.metric,
                &r.value.to_string(),
                r.unit,
                &target,
                &tol,
                r.criterion.unwrap_or(""),
                status,
            ])
            .map_err(io)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Aligned text table for a terminal.
    pub fn summary(&self) -> String {
        let mut s = format!("{} [{}]\n", self.name, self.digest);
        let width = self.rows.iter().map(|r| r.metric.len()).max().unwrap_or(0);
        for r in &self.rows {
            let _ = write!(s, "  {:width$}  {:>14} {:<6}", r.metric, fmt_value(r.value), r.unit);
            if let (Some(t), Some(c)) = (r.target, r.criterion) {
                let verdict = if t.accepts(r.value) { "pass" } else { "FAIL" };
                let _ = write!(s, "  {verdict} ({c}: {} {})", t.target_text(), t.tolerance_text());
            }
            s.push('\n');
        }
        let _ = writeln!(s, "  => {}", if self.passed() { "PASS" } else { "FAIL" });
        s
    }
}

fn fmt_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v:.4}")
    }
}

/// Host time to stream one row over the channel: open, burst every
/// column, close.
pub fn host_row_ns(model: &TimingEnergyModel, g: &Geometry) -> f64 {
    (model.t_rcd + model.burst_time(g.cacheline_size).scale(g.columns_per_row() as u64) + model.t_rp).as_ns()
}
