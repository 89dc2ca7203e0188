//! Report rows, CSV emission and the JSON manifest.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use crate::config::ExperimentKind;

/// Fixed CSV header. Floats use 17 significant digits.
pub const CSV_COLUMNS: [&str; 12] = [
    "experiment",
    "point",
    "parameter",
    "value",
    "metric",
    "measured",
    "comparison",
    "lower",
    "upper",
    "status",
    "module",
    "oracle",
];

/// How `measured` is judged.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
    Within(f64, f64),
    /// Reported for context, not judged.
    Info,
}

impl Bound {
    pub fn admits(self, x: f64) -> bool {
        match self {
            Self::AtMost(u) => x <= u,
            Self::AtLeast(l) => x >= l,
            Self::Within(l, u) => (l..=u).contains(&x),
            Self::Info => true,
        }
    }

    fn columns(self) -> (&'static str, Option<f64>, Option<f64>) {
        match self {
            Self::AtMost(u) => ("le", None, Some(u)),
            Self::AtLeast(l) => ("ge", Some(l), None),
            Self::Within(l, u) => ("in", Some(l), Some(u)),
            Self::Info => ("info", None, None),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub point: usize,
    pub parameter: &'static str,
    pub value: f64,
    pub metric: String,
    pub measured: f64,
    pub bound: Bound,
    /// Core module that produced `measured`.
    pub module: &'static str,
    /// What `measured` was compared against.
    pub oracle: &'static str,
}

impl Row {
    pub fn status(&self) -> &'static str {
        match self.bound {
            Bound::Info => "info",
            b if self.measured.is_finite() && b.admits(self.measured) => "pass",
            _ => "fail",
        }
    }

    pub fn passed(&self) -> bool {
        self.status() != "fail"
    }
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub rows: Vec<Row>,
    pub wall_clock: Duration,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(Row::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| !r.passed())
    }

    pub fn find(&self, metric: &str) -> impl Iterator<Item = &Row> {
        let metric = metric.to_owned();
        self.rows.iter().filter(move |r| r.metric == metric)
    }

    /// The CSV document as bytes.
    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_COLUMNS).expect("in-memory write");
        for r in &self.rows {
            let (cmp, lo, hi) = r.bound.columns();
            w.write_record([
                self.kind.name().to_owned(),
                r.point.to_string(),
                r.parameter.to_owned(),
                fmt_f64(r.value),
                r.metric.clone(),
                fmt_f64(r.measured),
                cmp.to_owned(),
                lo.map(fmt_f64).unwrap_or_default(),
                hi.map(fmt_f64).unwrap_or_default(),
                r.status().to_owned(),
                r.module.to_owned(),
                r.oracle.to_owned(),
            ])
            .expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Scientific notation with 17 significant digits, so the value round-trips.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    subcommand: &'a str,
    config: String,
    seed: u64,
    threads: usize,
    rows: usize,
    failed: usize,
    passed: bool,
    csv: String,
    csv_columns: &'a [&'a str],
    wall_clock_seconds: f64,
    version: &'a str,
}

pub struct Emitted {
    pub csv: PathBuf,
    pub manifest: PathBuf,
}

/// Writes the CSV and the manifest into `out`, creating it if needed.
pub fn emit(
    report: &ConvergenceReport,
    out: &Path,
    csv_name: &str,
    manifest_name: &str,
    subcommand: &str,
    config_path: &Path,
    threads: usize,
) -> std::io::Result<Emitted> {
    std::fs::create_dir_all(out)?;
    let csv = out.join(csv_name);
    std::fs::write(&csv, report.to_csv())?;
    let manifest = out.join(manifest_name);
    let m = Manifest {
        experiment: report.kind.name(),
        subcommand,
        config: config_path.display().to_string(),
        seed: report.seed,
        threads,
        rows: report.rows.len(),
        failed: report.failures().count(),
        passed: report.passed(),
        csv: csv_name.to_owned(),
        csv_columns: &CSV_COLUMNS,
        wall_clock_seconds: report.wall_clock.as_secs_f64(),
        version: env!("CARGO_PKG_VERSION"),
    };
    let mut f = std::fs::File::create(&manifest)?;
    serde_json::to_writer_pretty(&mut f, &m)?;
    f.write_all(b"\n")?;
    Ok(Emitted { csv, manifest })
}
