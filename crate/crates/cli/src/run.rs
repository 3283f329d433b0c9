//! Sweep execution and the CSV / manifest writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use fsorelay::analytic::{evaluate, Method, Metric, PerfCurve, PerfPoint, QuadratureControl};
use fsorelay::montecarlo::simulate;
use fsorelay::specfun::SeriesControl;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentSpec, Pair};
use crate::error::{CliError, Result};

pub const CSV_HEADER: [&str; 6] = [
    "gamma_avg_db",
    "metric",
    "method",
    "value",
    "stderr",
    "status",
];

/// One output row. `value` is absent when the evaluation failed, and
/// `status` then holds the error.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub avg_snr_db: f64,
    pub metric: Metric,
    pub method: Method,
    pub value: Option<f64>,
    pub stderr: Option<f64>,
    pub status: String,
}

impl Row {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }

    fn record(&self) -> [String; 6] {
        [
            self.avg_snr_db.to_string(),
            self.metric.to_string(),
            self.method.to_string(),
            self.value.map(fmt_float).unwrap_or_default(),
            self.stderr.map(fmt_float).unwrap_or_default(),
            self.status.clone(),
        ]
    }
}

/// Shortest round-trip scientific notation.
fn fmt_float(x: f64) -> String {
    format!("{x:e}")
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub library: String,
    pub library_version: String,
    pub seed: u64,
    pub csv: PathBuf,
    pub spec: ExperimentSpec,
}

#[derive(Debug)]
pub struct RunSummary {
    pub label: String,
    pub rows: Vec<Row>,
    pub skipped: Vec<Pair>,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
}

impl RunSummary {
    pub fn errors(&self) -> usize {
        self.rows.iter().filter(|r| !r.ok()).count()
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "== {} -> {}", self.label, self.csv_path.display());
        let _ = writeln!(
            s,
            "{:>9}  {:<5} {:<12} {:>13} {:>11}  status",
            "gamma_dB", "metric", "method", "value", "stderr"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>9}  {:<5} {:<12} {:>13} {:>11}  {}",
                r.avg_snr_db,
                r.metric.as_str(),
                r.method.as_str(),
                r.value.map_or_else(|| "-".into(), |v| format!("{v:.5e}")),
                r.stderr.map_or_else(|| "-".into(), |v| format!("{v:.3e}")),
                r.status
            );
        }
        for (m, k) in &self.skipped {
            let _ = writeln!(s, "skipped {m} x {k}: not defined for this system");
        }
        let _ = writeln!(s, "{} rows, {} errors", self.rows.len(), self.errors());
        s
    }
}

/// Seed for the Monte Carlo estimate at grid index `i`. Both metrics at one
/// grid point share it.
pub fn point_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add(i as u64)
}

/// Evaluates every applicable `(γ_avg, metric, method)` triple, in grid order.
pub fn compute_rows(spec: &ExperimentSpec) -> Result<(Vec<Row>, Vec<Pair>)> {
    let base = spec.system.to_config()?;
    let (pairs, skipped) = spec.pairs();
    let grid = spec.sweep.points();
    let tasks: Vec<_> = grid
        .iter()
        .enumerate()
        .flat_map(|(i, &db)| pairs.iter().map(move |&(m, k)| (i, db, m, k)))
        .collect();
    let (qctl, sctl) = (QuadratureControl::default(), SeriesControl::default());
    let rows = tasks
        .into_par_iter()
        .map(|(i, db, metric, method)| {
            let cfg = base.with_avg_snr_db(db);
            let out = match method {
                Method::MonteCarlo => simulate(&cfg, metric, spec.trials, point_seed(spec.seed, i))
                    .map(|e| (e.mean, Some(e.stderr))),
                _ => evaluate(&cfg, metric, method, &qctl, &sctl).map(|v| (v, None)),
            }
            .and_then(|(v, se)| PerfPoint::new(db, metric, method, v, se));
            match out {
                Ok(p) => Row {
                    avg_snr_db: db,
                    metric,
                    method,
                    value: Some(p.value),
                    stderr: p.stderr,
                    status: "ok".into(),
                },
                Err(e) => Row {
                    avg_snr_db: db,
                    metric,
                    method,
                    value: None,
                    stderr: None,
                    status: e.to_string(),
                },
            }
        })
        .collect();
    Ok((rows, skipped))
}

pub fn manifest_path(csv: &Path) -> PathBuf {
    csv.with_extension("manifest.json")
}

pub fn write_csv(path: &Path, rows: &[Row]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<Row>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != CSV_HEADER {
        return Err(CliError::Usage(format!(
            "{}: expected header {}",
            path.display(),
            CSV_HEADER.join(",")
        )));
    }
    let bad =
        |line: u64, what: &str| CliError::Usage(format!("{}:{line}: bad {what}", path.display()));
    let opt = |s: &str| -> std::result::Result<Option<f64>, ()> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| ())
        }
    };
    r.records()
        .map(|rec| {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            Ok(Row {
                avg_snr_db: rec[0].parse().map_err(|_| bad(line, "gamma_avg_db"))?,
                metric: rec[1].parse().map_err(|_| bad(line, "metric"))?,
                method: rec[2].parse().map_err(|_| bad(line, "method"))?,
                value: opt(&rec[3]).map_err(|_| bad(line, "value"))?,
                stderr: opt(&rec[4]).map_err(|_| bad(line, "stderr"))?,
                status: rec[5].to_string(),
            })
        })
        .collect()
}

/// Groups successful rows into one curve per `(metric, method)`.
pub fn curves(label: &str, rows: &[Row]) -> Result<Vec<PerfCurve>> {
    let mut keys: Vec<(Metric, Method)> = rows.iter().map(|r| (r.metric, r.method)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(metric, method)| {
            let points = rows
                .iter()
                .filter(|r| r.ok() && r.metric == metric && r.method == method)
                .map(|r| {
                    PerfPoint::new(
                        r.avg_snr_db,
                        metric,
                        method,
                        r.value.unwrap_or(f64::NAN),
                        r.stderr,
                    )
                })
                .collect::<fsorelay::Result<Vec<_>>>()?;
            Ok(PerfCurve::new(
                format!("{label}/{metric}/{method}"),
                points,
            )?)
        })
        .collect()
}

/// Runs a validated spec and writes the CSV and its manifest.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunSummary> {
    spec.validate().map_err(|inv| CliError::Validation {
        path: spec.label.clone(),
        line: None,
        message: inv.message,
    })?;
    let (rows, skipped) = compute_rows(spec)?;
    let csv_path = spec.output_path.clone();
    write_csv(&csv_path, &rows)?;
    let manifest = Manifest {
        library: "fsorelay".into(),
        library_version: fsorelay::VERSION.into(),
        seed: spec.seed,
        csv: csv_path
            .file_name()
            .map(PathBuf::from)
            .unwrap_or_else(|| csv_path.clone()),
        spec: spec.clone(),
    };
    let manifest_path = manifest_path(&csv_path);
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    fs::write(&manifest_path, json).map_err(|e| CliError::io(&manifest_path, e))?;
    Ok(RunSummary {
        label: spec.label.clone(),
        rows,
        skipped,
        csv_path,
        manifest_path,
    })
}
